//! Fixtures and frozen oracle values shared by the integration tests.
#![allow(dead_code)]

use fdiva::case_io::load_case;
use fdiva::grid_model::Grid;

pub fn grid(name: &str) -> Grid {
    let path = format!("{}/fixtures/{name}_fdi.m", env!("CARGO_MANIFEST_DIR"));
    Grid::new(load_case(path).unwrap()).unwrap()
}

// (case, target, N1, L_S, penalised optimum, target flow)
pub const ORACLE: &[(&str, usize, f64, f64, f64, f64)] = &[
    ("case3", 2, 0.5, 0.1, 23.333299999999983, 23.333333333333314),
    ("case3", 2, 1.0, 0.1, 23.333299999999983, 23.333333333333314),
    ("case3", 2, 5.0, 0.2, 26.66659999999998, 26.66666666666665),
    ("case3", 1, 1.0, 0.1, 133.33329999999998, 133.33333333333331),
    ("case3", 0, 2.0, 0.15, 116.66663333333332, 116.66666666666666),
    ("case3", 2, 0.01, 0.1, 20.999989999999983, 20.999999999999982),
    ("case3", 1, 0.02, 0.1, 131.99998, 132.0),
    ("case3", 0, 0.05, 0.1, 116.66663333333332, 116.66666666666666),
    ("case3", 1, 0.5, 0.05, 131.66665, 131.66666666666666),
    ("case3", 2, 1.0, 0.05, 21.666649999999983, 21.66666666666665),
    ("case3", 2, 1.0, 0.15, 24.999949999999984, 24.999999999999982),
    ("case3", 0, 1.0, 0.05, 113.33331666666669, 113.33333333333336),
    ("case6", 4, 0.5, 0.1, 38.685224504758565, 38.685230877687715),
    ("case6", 4, 1.0, 0.1, 38.685224504758565, 38.685230877687715),
    ("case6", 7, 1.0, 0.1, 40.00000000000001, 40.00000000000001),
    ("case6", 5, 2.0, 0.2, 49.49238494183995, 49.49242157208317),
    ("case6", 3, 1.0, 0.1, 22.486350036363696, 22.4863636363637),
    ("case6", 4, 0.05, 0.1, 38.685224504758565, 38.685230877687715),
    ("case6", 2, 0.1, 0.1, 87.41816021818187, 87.41818181818188),
    ("case6", 1, 0.1, 0.1, 121.69088749090909, 121.69090909090909),
    ("case6", 1, 1.0, 0.05, 120.84544374545455, 120.84545454545454),
    ("case6", 4, 1.0, 0.05, 38.65878960874165, 38.658794501233714),
    ("case6", 4, 1.0, 0.15, 38.71165940077549, 38.711667254141716),
    ("case6", 5, 0.1, 0.1, 43.76816021818183, 43.76818181818184),
    ("case6", 3, 0.2, 0.15, 26.229525054545512, 26.22954545454551),
    ("case6", 2, 1.0, 0.05, 83.70908010909096, 83.70909090909096),
    ("case6", 6, 1.0, 0.1, 51.12725112727277, 51.127272727272775),
    ("case6", 6, 0.3, 0.15, 56.69087669090913, 56.69090909090913),
];
