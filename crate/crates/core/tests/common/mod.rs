#![allow(dead_code)]

pub mod fixtures;
pub mod quad;

/// One row of `data/ratio_oracle.csv`.
#[derive(Debug, Clone, Copy)]
pub struct OracleRow {
    pub theta: f64,
    pub omega: f64,
    pub x: f64,
    pub value: f64,
}

pub fn oracle_table() -> Vec<OracleRow> {
    let text = include_str!("../../data/ratio_oracle.csv");
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|v| v.trim().parse().unwrap()).collect();
            OracleRow { theta: f[0], omega: f[1], x: f[2], value: f[3] }
        })
        .collect()
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}
