//! Fixtures, random generators and independent reference formulas shared by
//! the integration tests. Nothing here calls the contrast-matrix code.
#![allow(dead_code)]

use std::sync::Arc;

use coda_cube::{CellRecord, CoordinateKey, FactorDesign, FactorSpec, KCube, SbpTree};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const CZECH: [(&str, &str, &str, f64); 12] = [
    ("F", "FT", "15-24", 104.756),
    ("F", "PT", "15-24", 17.128),
    ("F", "FT", "25-54", 1618.415),
    ("F", "PT", "25-54", 90.505),
    ("F", "FT", "55+", 317.031),
    ("F", "PT", "55+", 56.355),
    ("M", "FT", "15-24", 169.851),
    ("M", "PT", "15-24", 11.165),
    ("M", "FT", "25-54", 2127.849),
    ("M", "PT", "25-54", 22.759),
    ("M", "FT", "55+", 467.212),
    ("M", "PT", "55+", 38.208),
];

/// Published coordinates of the Czech cube, rounded to 3 decimals, in row
/// order r:1 c:1 s:1 s:2 rc:1,1 rs:1,1 rs:1,2 cs:1,1 cs:1,2 rcs:1,1,1 rcs:1,1,2.
pub const CZECH_COORDS: [f64; 11] = [
    0.304, 4.672, -2.487, 1.097, -0.965, -0.249, 0.391, -0.528, 1.128, 0.124, -0.310,
];

pub fn czech_design() -> Arc<FactorDesign> {
    Arc::new(
        FactorDesign::new(vec![
            FactorSpec::new("gender", &["F", "M"], "(F,M)").unwrap(),
            FactorSpec::new("contract", &["FT", "PT"], "(FT,PT)").unwrap(),
            FactorSpec::new("age", &["15-24", "25-54", "55+"], "(15-24,(25-54,55+))").unwrap(),
        ])
        .unwrap(),
    )
}

pub fn czech_cube() -> KCube {
    let records: Vec<CellRecord> = CZECH
        .iter()
        .map(|&(g, c, a, v)| CellRecord::new(&[g, c, a], v))
        .collect();
    KCube::from_long_records(czech_design(), &records).unwrap()
}

/// A uniformly random binary partition tree over `levels`.
pub fn random_tree<R: Rng>(levels: &[String], rng: &mut R) -> SbpTree {
    if levels.len() == 1 {
        return SbpTree::leaf(levels[0].clone());
    }
    let mut shuffled = levels.to_vec();
    shuffled.shuffle(rng);
    let cut = rng.random_range(1..shuffled.len());
    SbpTree::node(
        random_tree(&shuffled[..cut], rng),
        random_tree(&shuffled[cut..], rng),
    )
}

pub fn level_names(n: usize) -> Vec<String> {
    (0..n).map(|l| format!("l{l}")).collect()
}

pub fn random_design<R: Rng>(dims: &[usize], rng: &mut R) -> Arc<FactorDesign> {
    let factors = dims
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let levels = level_names(n);
            let tree = random_tree(&levels, rng);
            FactorSpec::from_tree(&format!("f{i}"), &levels, tree).unwrap()
        })
        .collect();
    Arc::new(FactorDesign::new(factors).unwrap())
}

/// Cells with logs uniform in [-3, 3].
pub fn random_cube<R: Rng>(design: &Arc<FactorDesign>, rng: &mut R) -> KCube {
    let data = (0..design.cell_count())
        .map(|_| rng.random_range(-3.0..3.0f64).exp())
        .collect();
    KCube::new(design.clone(), data).unwrap()
}

pub fn closed(v: &[f64]) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.iter().map(|x| x / s).collect()
}

pub fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs())
        .fold(0.0, f64::max)
}

pub fn max_abs_err(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Aitchison inner product as the double sum of log-ratio products over 2D.
pub fn double_sum_inner(x: &[f64], y: &[f64]) -> f64 {
    let d = x.len();
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            s += (x[i] / x[j]).ln() * (y[i] / y[j]).ln();
        }
    }
    s / (2.0 * d as f64)
}

fn gm(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v.ln(), n + 1));
    (sum / n as f64).exp()
}

/// Three-factor closed forms of the decomposition, by direct enumeration
/// over i, j, k. Returns (ind, rc, rs, cs, rcs) in canonical order.
pub fn cube_parts_closed_form(cube: &KCube) -> [Vec<f64>; 5] {
    let d = cube.dims();
    assert_eq!(d.len(), 3);
    let (ni, nj, nk) = (d[0], d[1], d[2]);
    let x = |i: usize, j: usize, k: usize| cube.get(&[i, j, k]);
    let g_i = |i| {
        gm((0..nj)
            .flat_map(|j| (0..nk).map(move |k| (j, k)))
            .map(|(j, k)| x(i, j, k)))
    };
    let g_j = |j| {
        gm((0..ni)
            .flat_map(|i| (0..nk).map(move |k| (i, k)))
            .map(|(i, k)| x(i, j, k)))
    };
    let g_k = |k| {
        gm((0..ni)
            .flat_map(|i| (0..nj).map(move |j| (i, j)))
            .map(|(i, j)| x(i, j, k)))
    };
    let g_ij = |i, j| gm((0..nk).map(|k| x(i, j, k)));
    let g_ik = |i, k| gm((0..nj).map(|j| x(i, j, k)));
    let g_jk = |j, k| gm((0..ni).map(|i| x(i, j, k)));

    let mut out: [Vec<f64>; 5] = Default::default();
    for i in 0..ni {
        for j in 0..nj {
            for k in 0..nk {
                out[0].push(g_i(i) * g_j(j) * g_k(k));
                out[1].push(g_ij(i, j) / (g_i(i) * g_j(j)));
                out[2].push(g_ik(i, k) / (g_i(i) * g_k(k)));
                out[3].push(g_jk(j, k) / (g_j(j) * g_k(k)));
                out[4].push(
                    x(i, j, k) * g_i(i) * g_j(j) * g_k(k) / (g_ij(i, j) * g_jk(j, k) * g_ik(i, k)),
                );
            }
        }
    }
    out
}

/// A coordinate evaluated from group geometric means: the cells are split
/// into groups by the sign (+/-) of each factor of the key in its step,
/// groups with an even number of minus signs form the numerator, and the
/// constant is sqrt(|all plus| |all minus| / sum of group sizes).
pub fn coordinate_from_groups(cube: &KCube, key: &CoordinateKey) -> f64 {
    let design = cube.design();
    let steps: Vec<(usize, &coda_cube::SbpStep)> = key
        .subset
        .factors()
        .iter()
        .zip(&key.steps)
        .map(|(&f, &s)| (f, &design.factors()[f].steps()[s - 1]))
        .collect();
    let m = steps.len();
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); 1 << m];
    for flat in 0..cube.values().len() {
        let names = design.cell_names(flat);
        let mut id = 0;
        let mut inside = true;
        for (b, (f, step)) in steps.iter().enumerate() {
            let level = &names[*f];
            if step.minus.contains(level) {
                id |= 1 << b;
            } else if !step.plus.contains(level) {
                inside = false;
            }
        }
        if inside {
            groups[id].push(cube.values()[flat]);
        }
    }
    let total: usize = groups.iter().map(Vec::len).sum();
    let c = ((groups[0].len() * groups[(1 << m) - 1].len()) as f64 / total as f64).sqrt();
    let log_ratio: f64 = groups
        .iter()
        .enumerate()
        .map(|(id, g)| {
            let sign = if (id as u32).count_ones().is_multiple_of(2) {
                1.0
            } else {
                -1.0
            };
            sign * gm(g.iter().copied()).ln()
        })
        .sum();
    c * log_ratio
}

/// Two-factor table coordinates from the row-balance, column-balance and
/// odds-ratio formulas, in the order rows, columns, odds ratios (row step
/// major).
pub fn table_coordinates(table: &KCube) -> Vec<f64> {
    let design = table.design();
    assert_eq!(design.k(), 2);
    let (ni, nj) = (design.dims()[0], design.dims()[1]);
    let rows = &design.factors()[0];
    let cols = &design.factors()[1];
    let x = |i: usize, j: usize| table.get(&[i, j]);
    let idx = |f: &FactorSpec, names: &[String]| -> Vec<usize> {
        names.iter().map(|n| f.level_index(n).unwrap()).collect()
    };
    let mut out = Vec::new();
    for step in rows.steps() {
        let (plus, minus) = (idx(rows, &step.plus), idx(rows, &step.minus));
        let (s, t) = (plus.len() as f64, minus.len() as f64);
        let row_g = |i: usize| gm((0..nj).map(|j| x(i, j)));
        let num: f64 = plus.iter().map(|&i| row_g(i).ln()).sum::<f64>() / s;
        let den: f64 = minus.iter().map(|&i| row_g(i).ln()).sum::<f64>() / t;
        out.push((s * t * nj as f64 / (s + t)).sqrt() * (num - den));
    }
    for step in cols.steps() {
        let (plus, minus) = (idx(cols, &step.plus), idx(cols, &step.minus));
        let (u, v) = (plus.len() as f64, minus.len() as f64);
        let col_g = |j: usize| gm((0..ni).map(|i| x(i, j)));
        let num: f64 = plus.iter().map(|&j| col_g(j).ln()).sum::<f64>() / u;
        let den: f64 = minus.iter().map(|&j| col_g(j).ln()).sum::<f64>() / v;
        out.push((u * v * ni as f64 / (u + v)).sqrt() * (num - den));
    }
    for rs in rows.steps() {
        for cs in cols.steps() {
            let cells = |ri: &[usize], ci: &[usize]| -> Vec<f64> {
                ri.iter()
                    .flat_map(|&i| ci.iter().map(move |&j| (i, j)))
                    .map(|(i, j)| x(i, j))
                    .collect()
            };
            let (rp, rm) = (idx(rows, &rs.plus), idx(rows, &rs.minus));
            let (cp, cm) = (idx(cols, &cs.plus), idx(cols, &cs.minus));
            let a = cells(&rp, &cp);
            let b = cells(&rp, &cm);
            let c = cells(&rm, &cp);
            let d = cells(&rm, &cm);
            let total = (a.len() + b.len() + c.len() + d.len()) as f64;
            let k = ((a.len() * d.len()) as f64 / total).sqrt();
            let g = |v: &[f64]| gm(v.iter().copied()).ln();
            out.push(k * (g(&a) + g(&d) - g(&b) - g(&c)));
        }
    }
    out
}
