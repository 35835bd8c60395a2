//! Dip statistic against frozen reference values.
//!
//! Expected values were computed once with an independent implementation of
//! Hartigan's algorithm (the `diptest` Python package) and frozen here.

use crowdlens::stats::{dip_statistic, dip_test, DipVerdict};

const CASES: &[(&str, &[f64], f64)] = &[
    ("four_points", &[0.0, 1.0, 2.0, 3.0], 0.125),
    ("two_clusters", &[1.0, 2.0, 3.0, 4.0, 10.0, 11.0, 12.0, 13.0], 0.16666666666666669),
    ("ties", &[1.0, 1.0, 1.0, 2.0, 2.0, 3.0, 5.0, 5.0, 5.0, 5.0, 8.0, 9.0], 0.14583333333333334),
    ("uniform_20", &[0.6758, 0.2143, 0.3095, 0.7995, 0.9958, 0.1422, 0.0787, 0.1808, 0.3596, 0.1696, 0.5888, 0.6168, 0.1054, 0.5657, 0.0046, 0.4651, 0.9756, 0.7994, 0.5968, 0.3253], 0.07516524105754277),
    ("normal_30", &[0.9031, -1.4806, -0.5341, 0.1638, -0.6685, -0.2523, -0.2219, 0.4181, -0.4313, 0.2723, 0.0568, 0.4246, 0.2249, 1.6577, -0.6637, 1.1992, -0.4026, -0.9579, 1.2112, -0.4395, -0.3876, -1.3887, -2.0982, 0.6343, -1.1653, 0.7783, 1.8482, -0.1148, -1.1266, 0.3942], 0.04648280390708363),
    ("bimodal_40", &[0.2285, -0.0785, 0.0052, 0.4006, 0.3796, 0.213, -0.2599, -0.0161, 0.1809, -0.0636, -0.183, -0.2296, -0.1896, -0.2015, -0.1353, 0.3437, -0.2402, 0.2661, 0.1253, 0.0419, 2.7518, 2.863, 3.5921, 3.0297, 3.1615, 3.1989, 3.3167, 2.9287, 2.8169, 2.9821, 2.9218, 3.2372, 3.0569, 3.0718, 3.0435, 3.3685, 2.8372, 2.8565, 3.2655, 2.9681], 0.18814987027864818),
    ("trimodal_45", &[0.0722, -0.1458, 0.0047, 0.0864, -0.2655, -0.139, 0.0846, 0.4498, 0.0925, -0.0118, -0.169, 0.0783, -0.5003, -0.0099, -0.066, 1.8961, 2.4641, 1.5053, 1.9955, 2.0138, 2.0935, 1.6797, 1.9067, 1.7009, 1.9745, 2.0392, 2.0329, 1.9604, 2.0372, 2.0355, 4.081, 4.005, 3.6434, 3.8371, 4.0691, 3.8179, 3.8403, 4.0227, 3.9909, 4.1788, 4.1024, 3.913, 4.0229, 3.4282, 3.8405], 0.114023281044792),
    ("skewed_50", &[3.3081, 1.6014, 0.1193, 0.2812, 0.1421, 0.4858, 0.2755, 3.3117, 1.311, 0.1156, 0.4829, 0.0028, 1.0199, 0.0908, 0.9938, 0.3492, 1.1038, 2.1781, 1.5816, 0.8354, 0.386, 1.2188, 1.5099, 2.1223, 1.0932, 0.0511, 0.4275, 3.2387, 0.0115, 0.1133, 3.8189, 0.1622, 0.6025, 1.7387, 3.1884, 0.0492, 0.4099, 0.3067, 1.6003, 0.4285, 0.9403, 0.8202, 1.1417, 0.7047, 1.982, 0.0294, 0.2957, 0.7492, 0.8237, 1.5761], 0.03851359703337454),
    ("lopsided_60", &[0.7029, 0.5789, -1.0525, 1.9281, -1.9773, -0.188, -1.0216, 1.1902, -1.3105, -1.0341, -1.139, -1.3783, -0.5728, 0.1802, -0.9696, -1.694, -0.2811, -0.0457, 0.6967, -0.8246, -0.2024, 0.8923, -1.0076, -0.1109, -0.3745, -1.4556, -0.1301, 1.1092, 2.2309, -1.4571, 0.9196, 1.1028, 1.2063, -0.4451, 0.3062, -0.6196, 0.5522, 1.1903, -0.2561, 0.2131, 0.8512, 0.7094, -0.6697, 1.3623, 0.4767, 0.1466, 0.0328, 0.6915, 1.0225, -1.274, 5.5633, 5.1353, 6.2199, 6.1912, 5.8241, 5.4506, 6.6538, 6.7992, 6.7887, 6.0244], 0.05298105057315267),
    ("integers_35", &[5.0, 0.0, 0.0, 0.0, 5.0, 1.0, 0.0, 4.0, 1.0, 0.0, 3.0, 1.0, 4.0, 5.0, 1.0, 5.0, 4.0, 4.0, 3.0, 0.0, 3.0, 4.0, 1.0, 5.0, 2.0, 4.0, 2.0, 3.0, 1.0, 4.0, 4.0, 5.0, 3.0, 2.0, 2.0], 0.09642857142857143),
    ("uniform_200", &[0.62001, 0.609, 0.46935, 0.37945, 0.00777, 0.81455, 0.52027, 0.63031, 0.27342, 0.52938, 0.03468, 0.48458, 0.52313, 0.29316, 0.27212, 0.62058, 0.09978, 0.12548, 0.18666, 0.34333, 0.96915, 0.85174, 0.4374, 0.68981, 0.40898, 0.77608, 0.69921, 0.01124, 0.59694, 0.25954, 0.92343, 0.62231, 0.90203, 0.81386, 0.41441, 0.89507, 0.98328, 0.23002, 0.429, 0.08259, 0.49915, 0.45234, 0.48443, 0.13564, 0.5105, 0.37534, 0.42697, 0.767, 0.50347, 0.02185, 0.40205, 0.89392, 0.29561, 0.15514, 0.0088, 0.56939, 0.21639, 0.33038, 0.78037, 0.88931, 0.23383, 0.19209, 0.2894, 0.95782, 0.01037, 0.74095, 0.94531, 0.34616, 0.18363, 0.84921, 0.15784, 0.72461, 0.96339, 0.36341, 0.09156, 0.52244, 0.74042, 0.49319, 0.36451, 0.42323, 0.70569, 0.24366, 0.51538, 0.12791, 0.73394, 0.69273, 0.17247, 0.23713, 0.31023, 0.32216, 0.31179, 0.77586, 0.03454, 0.19902, 0.65485, 0.1733, 0.85203, 0.79129, 0.79988, 0.63695, 0.04395, 0.96328, 0.12715, 0.03449, 0.51844, 0.91651, 0.33515, 0.77747, 0.47742, 0.08571, 0.63903, 0.96492, 0.69197, 0.66873, 0.5935, 0.09937, 0.40974, 0.21164, 0.58475, 0.51868, 0.05097, 0.45261, 0.74477, 0.34895, 0.62781, 0.34586, 0.07312, 0.12294, 0.01775, 0.03865, 0.68917, 0.19837, 0.86383, 0.76872, 0.73594, 0.66808, 0.92726, 0.54567, 0.27309, 0.70281, 0.13181, 0.29975, 0.0156, 0.96062, 0.29334, 0.85707, 0.89476, 0.50428, 0.74964, 0.31133, 0.40893, 0.90597, 0.95921, 0.08698, 0.81366, 0.79642, 0.42604, 0.02556, 0.45823, 0.65187, 0.14557, 0.56573, 0.90727, 0.146, 0.68338, 0.39048, 0.76915, 0.61262, 0.40835, 0.49513, 0.06718, 0.74929, 0.32637, 0.96669, 0.88003, 0.12679, 0.96926, 0.36719, 0.70802, 0.91774, 0.20967, 0.26504, 0.89947, 0.56563, 0.39196, 0.50338, 0.67971, 0.28007, 0.004, 0.26923, 0.89071, 0.35576, 0.24417, 0.37403, 0.5301, 0.97478, 0.6364, 0.08494, 0.87204, 0.64353], 0.019981840331542003),
    ("bathtub_150", &[0.02582, 0.00318, 0.01085, 0.03232, 0.01231, 0.04071, 0.0102, 0.03725, 0.03576, 0.01551, 0.0271, 0.04634, 0.01258, 0.04015, 0.02948, 0.01123, 0.02436, 0.00943, 0.02687, 0.02953, 0.04039, 0.03503, 0.00432, 0.03678, 0.01471, 0.01246, 0.04509, 0.04636, 0.01533, 0.00968, 0.02425, 0.01805, 0.04867, 0.01273, 0.04343, 0.02349, 0.03111, 0.04723, 0.02513, 0.03692, 0.04092, 0.04188, 0.02382, 0.03679, 0.00759, 0.00254, 0.04468, 0.00374, 0.00317, 0.0392, 0.00823, 0.00365, 0.01606, 0.03366, 0.00611, 0.04316, 0.04862, 0.03238, 0.03641, 0.00869, 0.7179, 0.88708, 0.86327, 0.57155, 0.74787, 0.48371, 0.70702, 0.70739, 0.50045, 0.56296, 0.83229, 0.51204, 0.5414, 0.63103, 0.49871, 0.64166, 0.57569, 0.6153, 0.70751, 0.83141, 0.57864, 0.65632, 0.45103, 0.80821, 0.58609, 0.88855, 0.77289, 0.77894, 0.73674, 0.45628, 0.81658, 0.63565, 0.74374, 0.77712, 0.41817, 0.86051, 0.40098, 0.81378, 0.66316, 0.58712, 0.79652, 0.72269, 0.80774, 0.72571, 0.72248, 0.64301, 0.74245, 0.71571, 0.59781, 0.78236, 0.63871, 0.81554, 0.73658, 0.86198, 0.8458, 0.87878, 0.58154, 0.77507, 0.88634, 0.82119, 0.50267, 0.66071, 0.52752, 0.6779, 0.82239, 0.82435, 0.48077, 0.72108, 0.64789, 0.56396, 0.72019, 0.75196, 0.47978, 0.81159, 0.61124, 0.75695, 0.54727, 0.75151, 0.43237, 0.85139, 0.68551, 0.83629, 0.48083, 0.55515, 0.76996, 0.45375, 0.80668, 0.59883, 0.55674, 0.50126], 0.13398985569367053),
];

#[test]
fn matches_reference_values() {
    for (name, x, expected) in CASES {
        let got = dip_statistic(x).unwrap();
        assert!((got - expected).abs() < 1e-12, "{name}: got {got}, expected {expected}");
    }
}

#[test]
fn evenly_spaced_sample_has_minimal_dip() {
    // The reference package reports 0 here; the original algorithm floors the
    // statistic at 1 / (2n), which is what `four_points` above encodes.
    let got = dip_statistic(&[0.0, 1.0, 2.0, 3.0]).unwrap();
    assert_eq!(got, 1.0 / 8.0);
}

#[test]
fn input_order_is_irrelevant() {
    let (_, x, expected) = CASES[5];
    let mut rev = x.to_vec();
    rev.reverse();
    assert!((dip_statistic(&rev).unwrap() - expected).abs() < 1e-12);
}

#[test]
fn separated_clusters_reject_and_uniform_does_not() {
    let (_, bimodal, _) = CASES[5];
    let res = dip_test(bimodal, 500, 11).unwrap();
    assert_eq!(res.verdict, DipVerdict::Multimodal);
    assert!(res.p_value < 0.01);

    let (_, uniform, _) = CASES[10];
    let res = dip_test(uniform, 500, 11).unwrap();
    assert_eq!(res.verdict, DipVerdict::Unimodal);
}
