# Generated once from numpy.random.default_rng(0x5EED): 256 pairs (x1, y1, x2, y2)
# drawn from an isotropic Gaussian (sigma = 31/5), rounded, truncated to |v| <= 15.
# Regenerate with flowdesc.descriptors.orb.generate_pattern(); tests check they agree.

ORB_PATTERN = (
    (2, 6, 10, 0), (-11, 6, 7, -5), (-4, -9, -2, -4), (3, -5, 3, 4),
    (-2, 3, 8, -4), (-2, -3, 10, -3), (-2, -6, -13, -11), (1, -1, 13, -4),
    (9, 7, -7, 6), (8, 0, 12, -10), (9, 7, 1, 0), (-3, 3, -1, -6),
    (-8, 0, 3, 5), (10, 9, -3, -3), (7, -9, -9, -4), (2, 15, -5, 3),
    (5, -5, -9, 3), (-1, 4, -7, 4), (1, 0, -5, 7), (3, 2, -5, 5),
    (10, -3, -3, 5), (-3, 10, 0, 7), (12, -2, -2, -3), (-1, 7, -3, -6),
    (-1, 0, 1, 12), (8, 3, -12, 1), (9, -4, 4, -1), (6, -1, 8, -4),
    (2, -6, 0, 8), (0, -7, 1, -4), (-4, 11, -3, -8), (7, 2, -3, -10),
    (11, -2, 0, 8), (2, -5, 2, 5), (2, 12, -8, 1), (6, 1, -4, -15),
    (-11, 11, -2, -1), (-1, 0, 0, 0), (7, 3, -2, 0), (2, -5, -8, -1),
    (-1, 1, -6, 6), (2, 4, -5, 0), (-3, -1, 3, 4), (-3, 8, 8, 2),
    (-3, -2, -4, -12), (-2, 3, 9, -5), (-9, -8, -3, 14), (-1, 5, 10, 3),
    (3, 3, 5, 6), (0, -7, -4, 0), (-1, 7, 2, -8), (3, 0, 4, 0),
    (-13, -2, -10, -11), (-13, 3, -10, -5), (-7, -1, 0, 7), (1, 7, -10, -13),
    (-3, 3, 1, 7), (-8, 2, 4, -7), (0, 5, 1, 3), (4, 5, 2, 4),
    (1, 1, 12, 3), (-7, 0, 2, 1), (-14, 12, 2, 3), (-2, 0, -9, -10),
    (3, -4, -5, 7), (2, -1, 0, -2), (5, -3, 4, 8), (4, -9, 7, 4),
    (-3, 7, 3, 3), (-1, 10, 2, -9), (-2, 2, 0, -3), (8, -3, 6, 0),
    (5, 0, 5, -6), (2, -6, -6, -2), (-7, -6, -2, 7), (6, -4, -10, 2),
    (3, 1, 13, -13), (6, -2, -2, -8), (10, -8, -3, 4), (13, 3, 7, 0),
    (-3, 1, 6, 2), (4, -5, -5, 0), (-3, 6, 0, 5), (-3, 2, -1, 0),
    (5, -4, -1, 5), (5, 7, 4, -2), (1, -6, -3, -12), (13, -1, 2, -11),
    (-1, -10, 0, 6), (7, 3, -2, 3), (3, -7, 8, -3), (3, -1, -9, -1),
    (3, 2, -10, -5), (-10, 12, 3, 2), (0, 3, 0, -2), (-4, 4, -5, -2),
    (-1, -3, 3, -5), (-3, 1, 1, -9), (1, -1, 4, 2), (1, 0, -1, 6),
    (-5, 2, -10, 4), (6, 8, 6, -3), (-8, -7, -2, -2), (3, 1, -2, -2),
    (-1, 8, -6, 4), (2, -1, 9, -5), (8, 6, 12, -4), (-7, 12, 6, -2),
    (8, 4, -1, -1), (1, 5, 6, -2), (-1, 9, 8, 3), (-10, 6, -8, 1),
    (2, -8, -14, 5), (-4, -8, -8, 1), (0, -5, 0, 5), (5, 9, 0, 13),
    (6, -8, 0, 1), (-9, 0, -7, 2), (1, 10, 2, 2), (2, -5, -12, 2),
    (5, 3, 0, 6), (4, -8, 7, -4), (-8, 0, -3, 2), (-1, 1, -3, -3),
    (3, -3, 8, -1), (3, 8, 4, 7), (0, -6, -5, 0), (-2, 10, -3, -5),
    (6, -14, -4, -9), (15, 1, 0, 2), (-5, 7, 3, 6), (0, -9, 7, 1),
    (3, -3, -3, 6), (6, -6, -4, 5), (6, 6, 8, -1), (-4, -6, -11, 13),
    (2, 1, -1, -4), (-10, 4, -5, 7), (-5, -2, 2, -3), (-10, -6, 4, 0),
    (3, -2, 0, -2), (-3, 1, -1, -10), (0, -1, -5, 2), (1, 4, 5, -10),
    (-1, -11, -3, 3), (-10, 3, -2, -3), (1, -9, -10, 8), (3, 2, -7, 11),
    (1, 9, -9, -2), (3, -13, 10, -2), (4, -4, 5, 9), (-3, -4, 3, -7),
    (-4, 3, 9, 0), (9, 7, 2, 6), (0, 14, -11, -2), (-12, -4, 7, -10),
    (2, -6, 10, 1), (5, 8, -6, -7), (4, -4, -7, 2), (-10, 4, 2, 5),
    (-5, 10, 1, 0), (-11, -1, -11, 0), (-3, 2, 1, -5), (-9, -4, -1, -2),
    (5, 2, -4, 7), (-4, 12, 4, -3), (12, 4, 7, 6), (-5, 5, 1, 7),
    (-10, -8, -9, 3), (7, 11, 0, -10), (0, 4, 3, -1), (-12, 4, 7, 2),
    (0, 7, -7, 15), (-11, 9, 4, -3), (-5, 3, 12, -9), (3, 2, 0, -3),
    (3, -9, -4, 6), (10, 2, -7, 1), (-3, -15, -3, -5), (-3, 5, 15, 5),
    (-5, 2, 1, -9), (7, 4, 3, -4), (0, -8, -5, 4), (-4, 10, 11, -9),
    (-12, -7, -5, -11), (4, 4, 1, 4), (-5, 10, -4, 2), (9, 7, 5, 0),
    (-4, -1, -3, 0), (1, 2, -6, -3), (-3, -7, -6, -4), (-5, -4, 8, -3),
    (1, 0, -4, 14), (9, -10, -1, -1), (2, -4, -3, -10), (3, 3, 6, -4),
    (-11, -6, -4, 4), (-2, 6, 5, -3), (5, -8, -2, -9), (0, -2, -9, 5),
    (-8, 0, -3, -2), (-1, 2, -4, -7), (-9, -1, 1, -1), (3, -2, 6, 2),
    (-3, -3, -8, -2), (-5, 5, 0, 9), (-2, 0, 7, 7), (-2, 9, -9, -2),
    (2, 1, 0, -11), (-8, 4, -7, -4), (12, 12, -3, -12), (5, -3, -4, 3),
    (-9, 5, 0, -3), (-13, 1, 5, -2), (3, -3, -3, 11), (6, 0, -2, 4),
    (-1, -8, -1, 7), (-5, -2, 4, 2), (-14, -7, -9, 0), (9, 11, -12, 1),
    (1, -1, -4, 3), (0, 11, 1, 9), (3, 1, 4, -7), (2, 2, -4, 6),
    (1, -9, 7, -1), (-5, 6, 15, -2), (1, -7, 4, 2), (-6, -1, -8, 0),
    (13, -5, -2, -2), (-1, -6, -7, 4), (0, 2, -1, -6), (5, -6, 6, -11),
    (-1, 0, -3, -6), (6, 2, 1, 5), (4, -2, -6, -1), (-4, -10, -2, 3),
    (4, -3, 4, 5), (-1, -8, 1, 4), (0, 2, 6, -7), (1, -1, 2, -8),
    (-3, -7, 7, 0), (-1, -9, 0, -4), (-12, -8, -3, 4), (-5, -11, -5, -12),
    (-10, 1, 6, -1), (-8, 13, 15, -4), (2, -5, -2, 8), (4, 0, -6, -5),
    (-1, -7, -4, -1), (7, 9, 6, -4), (-15, -6, -3, 1), (-1, 3, 2, -2),
    (-3, -4, -2, 4), (-3, 8, 11, 3), (-2, 0, 13, -6), (14, -1, 8, -1),
)
