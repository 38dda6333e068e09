//! Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion and exits
//! nonzero if any criterion fails.
//!
//! The sample-table check needs an external long-format CSV (columns `id`,
//! `gender`, `contract`, `age`, `value`, with the same level labels as the
//! Czech cube) named by `CODACUBE_SAMPLE_CSV`; it is skipped otherwise.

mod common;

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use coda_cube::composition::aitchison_inner;
use coda_cube::stats::covariance;
use coda_cube::{
    bootstrap_ci, build_contrast_matrix, coordinate_matrix, coords, inverse, mean_sd, pca,
    BootstrapConfig, CellRecord, CoordinateKey, CubeSample, FactorDesign, KCube, Part,
};
use common::*;
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn golden_example() -> Outcome {
    let start = Instant::now();
    let cube = czech_cube();
    let v = build_contrast_matrix(cube.design());
    let z = coords(&cube, &v, true).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let err = max_abs_err(z.values(), &CZECH_COORDS);
    check(
        err <= 0.002 && elapsed < 1.0,
        format!("max |z - published| = {err:.2e} (tol 2e-3), runtime {elapsed:.3}s (limit 1s)"),
    )
}

fn unnormalized_readouts() -> Outcome {
    let cube = czech_cube();
    let d = cube.design().clone();
    let v = build_contrast_matrix(&d);
    let z = coords(&cube, &v, true).unwrap();
    let get = |group: &str, steps: Vec<usize>| {
        z.get(&CoordinateKey::new(d.parse_group(group).unwrap(), steps))
            .unwrap()
    };
    let r = (get("r", vec![1]) / 3f64.sqrt()).exp();
    let c = (get("c", vec![1]) / 3f64.sqrt()).exp();
    let raw = coords(&cube, &v, false).unwrap();
    let lor = raw
        .get(&CoordinateKey::new(
            d.parse_group("rc").unwrap(),
            vec![1, 1],
        ))
        .unwrap();
    let odds = lor.exp();
    let ok = (r - 1.19).abs() <= 0.01
        && (14.5..=15.5).contains(&c)
        && (odds - 0.33).abs() <= 0.01
        && (lor + 1.12).abs() <= 0.01;
    check(
        ok,
        format!(
            "gender ratio {r:.4} (1.19±0.01), contract ratio {c:.3} ([14.5,15.5]), \
             odds ratio {odds:.4} (0.33±0.01), mean log-odds ratio {lor:.4} (-1.12±0.01)"
        ),
    )
}

fn orthonormality() -> Outcome {
    let mut r = rng(11);
    let (mut worst_orth, mut worst_sum) = (0f64, 0f64);
    let mut count = 0;
    for i in [2, 3, 4] {
        for j in [2, 3] {
            for k in [2, 3] {
                for _ in 0..20 {
                    let v = build_contrast_matrix(&random_design(&[i, j, k], &mut r));
                    worst_orth = worst_orth.max(v.orthonormality_error());
                    worst_sum = worst_sum.max(v.max_row_sum());
                    count += 1;
                }
            }
        }
    }
    check(
        worst_orth < 1e-10 && worst_sum < 1e-12,
        format!(
            "{count} matrices: max |VV'-I| = {worst_orth:.2e} (tol 1e-10), \
             max |row sum| = {worst_sum:.2e} (tol 1e-12)"
        ),
    )
}

fn round_trip() -> Outcome {
    let mut r = rng(12);
    let mut worst = 0f64;
    for t in 0..100 {
        let dims: &[usize] = [&[2, 2, 3][..], &[3, 3, 3], &[4, 2, 3], &[2, 3]][t % 4];
        let d = random_design(dims, &mut r);
        let cube = random_cube(&d, &mut r);
        let v = build_contrast_matrix(&d);
        let back = inverse(&coords(&cube, &v, true).unwrap(), &v, d).unwrap();
        worst = worst.max(max_rel_err(back.values(), &closed(cube.values())));
    }
    check(
        worst < 1e-10,
        format!("100 cubes: max relative error {worst:.2e} (tol 1e-10)"),
    )
}

fn decomposition_cubes() -> Vec<KCube> {
    let mut r = rng(13);
    let mut cubes = Vec::new();
    for dims in [[2, 2, 3], [3, 3, 3]] {
        for _ in 0..100 {
            let d = random_design(&dims, &mut r);
            cubes.push(random_cube(&d, &mut r));
        }
    }
    cubes
}

/// Largest relative deviation from a constant along each factor outside the
/// subset.
fn slice_spread(cube: &KCube, subset: &coda_cube::FactorSubset) -> f64 {
    let d = cube.design();
    let mut worst = 0f64;
    for flat in 0..d.cell_count() {
        let mut base = d.cell_levels(flat);
        for g in (0..d.k()).filter(|g| !subset.contains(*g)) {
            base[g] = 0;
        }
        let (a, b) = (cube.values()[flat], cube.get(&base));
        worst = worst.max((a - b).abs() / b);
    }
    worst
}

fn decomposition_suite(cubes: &[KCube]) -> Outcome {
    let (mut recon, mut inner, mut marg, mut closed_form) = (0f64, 0f64, 0f64, 0f64);
    for cube in cubes {
        let dec = cube.decompose();
        recon = recon.max(max_abs_err(
            &dec.reconstruct().log_values(),
            &cube.log_values(),
        ));
        let comps: Vec<_> = dec
            .parts()
            .iter()
            .map(|(_, c)| c.to_composition())
            .collect();
        for i in 0..comps.len() {
            for j in i + 1..comps.len() {
                inner = inner.max(aitchison_inner(&comps[i], &comps[j]).unwrap().abs());
            }
        }
        let k = cube.design().k();
        for (part, c) in dec.parts() {
            let Part::Interaction(subset) = part else {
                continue;
            };
            for &f in subset.factors() {
                let keep: Vec<usize> = (0..k).filter(|&g| g != f).collect();
                marg = marg.max(c.geo_marginal_by_index(&keep).relative_spread());
            }
            marg = marg.max(slice_spread(c, subset));
        }
        let oracle = cube_parts_closed_form(cube);
        for ((_, part), want) in dec.parts().iter().zip(&oracle) {
            closed_form = closed_form.max(max_rel_err(&closed(part.values()), &closed(want)));
        }
    }
    check(
        recon < 1e-12 && inner < 1e-8 && marg < 1e-10 && closed_form < 1e-12,
        format!(
            "{} cubes: (a) log reconstruction {recon:.2e} (tol 1e-12), (b) max |<part,part'>| \
             {inner:.2e} (tol 1e-8), (c) marginal/slice spread {marg:.2e} (tol 1e-10), \
             (d) closed forms {closed_form:.2e} (tol 1e-12)",
            cubes.len()
        ),
    )
}

fn dimension_accounting(cubes: &[KCube]) -> Outcome {
    let mut failures = Vec::new();
    let mut off_block = 0f64;
    for cube in cubes {
        let d = cube.design();
        let dims = d.dims();
        let (i, j, k) = (dims[0], dims[1], dims[2]);
        let expected = [
            i + j + k - 3,
            (i - 1) * (j - 1),
            (i - 1) * (k - 1),
            (j - 1) * (k - 1),
            (i - 1) * (j - 1) * (k - 1),
        ];
        let v = build_contrast_matrix(d);
        for ((part, c), want) in cube.decompose().parts().iter().zip(expected) {
            let z = coords(c, &v, true).unwrap();
            let mut nonzero = 0;
            for (key, value) in z.keys().iter().zip(z.values()) {
                let in_block = match part {
                    Part::Independent => key.subset.len() == 1,
                    Part::Interaction(s) => &key.subset == s,
                };
                if in_block {
                    nonzero += usize::from(value.abs() > 1e-10);
                } else {
                    off_block = off_block.max(value.abs());
                }
            }
            if nonzero != want {
                failures.push(format!("{}: {nonzero} != {want}", part.label(d)));
            }
        }
    }
    check(
        failures.is_empty() && off_block < 1e-10,
        format!(
            "{} cubes: count mismatches {}, max off-block |z| {off_block:.2e} (tol 1e-10)",
            cubes.len(),
            failures.len()
        ),
    )
}

fn additivity(cubes: &[KCube]) -> Outcome {
    let mut worst = 0f64;
    for cube in cubes {
        let v = build_contrast_matrix(cube.design());
        let z = coords(cube, &v, true).unwrap();
        let mut sum = vec![0.0; z.len()];
        for (_, part) in cube.decompose().parts() {
            for (s, x) in sum.iter_mut().zip(coords(part, &v, true).unwrap().values()) {
                *s += x;
            }
        }
        worst = worst.max(max_abs_err(&sum, z.values()));
    }
    check(
        worst < 1e-10,
        format!(
            "{} cubes: max |z - sum of part coordinates| {worst:.2e} (tol 1e-10)",
            cubes.len()
        ),
    )
}

fn two_factor_regression() -> Outcome {
    let mut r = rng(14);
    let mut worst = 0f64;
    let mut count = 0;
    for i in 2..=5 {
        for j in 2..=5 {
            for _ in 0..5 {
                let d = random_design(&[i, j], &mut r);
                let table = random_cube(&d, &mut r);
                let z = coords(&table, &build_contrast_matrix(&d), true).unwrap();
                worst = worst.max(max_abs_err(z.values(), &table_coordinates(&table)));
                count += 1;
            }
        }
    }
    check(
        worst < 1e-10,
        format!("{count} tables: max abs difference {worst:.2e} (tol 1e-10)"),
    )
}

fn bootstrap() -> Outcome {
    let start = Instant::now();
    let mut r = rng(15);
    let d = random_design(&[2, 2, 2], &mut r);
    let v = build_contrast_matrix(&d);
    let mu: Vec<f64> = (0..d.cell_count())
        .map(|_| r.random_range(-1.0..1.0))
        .collect();
    let truth = coords(&KCube::from_log_values(d.clone(), &mu).unwrap(), &v, true).unwrap();
    let noise = Normal::new(0.0, 0.5).unwrap();
    let sample = |r: &mut rand_chacha::ChaCha8Rng| {
        let cubes = (0..50)
            .map(|_| {
                let logs: Vec<f64> = mu.iter().map(|m| m + noise.sample(r)).collect();
                KCube::from_log_values(d.clone(), &logs).unwrap()
            })
            .collect();
        coordinate_matrix(&CubeSample::new(cubes).unwrap(), &v, true)
            .unwrap()
            .values
    };

    let m = sample(&mut r);
    let config = BootstrapConfig {
        resamples: 500,
        alpha: 0.05,
        seed: 7,
    };
    let bits = |ci: &coda_cube::BootstrapCi| -> Vec<u64> {
        ci.entries
            .iter()
            .flat_map(|e| [e.mean, e.sd, e.lower, e.upper])
            .map(f64::to_bits)
            .collect()
    };
    let deterministic =
        bits(&bootstrap_ci(&m, config).unwrap()) == bits(&bootstrap_ci(&m, config).unwrap());

    let (mut covered, mut total) = (0usize, 0usize);
    for trial in 0..200 {
        let m = sample(&mut r);
        let ci = bootstrap_ci(
            &m,
            BootstrapConfig {
                seed: trial,
                ..config
            },
        )
        .unwrap();
        for (e, t) in ci.entries.iter().zip(truth.values()) {
            covered += usize::from(e.lower <= *t && *t <= e.upper);
            total += 1;
        }
    }
    let coverage = covered as f64 / total as f64;
    let elapsed = start.elapsed().as_secs_f64();
    check(
        deterministic && (0.90..=0.99).contains(&coverage) && elapsed < 30.0,
        format!(
            "repeat runs identical: {deterministic}; coverage {coverage:.4} over {total} intervals \
             ([0.90,0.99]); runtime {elapsed:.2}s (limit 30s)"
        ),
    )
}

fn pca_suite() -> Outcome {
    let mut r = rng(16);
    let d = random_design(&[2, 3, 3], &mut r);
    let cubes = (0..32).map(|_| random_cube(&d, &mut r)).collect();
    let sample = CubeSample::new(cubes).unwrap();
    let m = coordinate_matrix(&sample, &build_contrast_matrix(&d), true).unwrap();
    let res = pca(&m, None).unwrap();

    let (_, cov) = covariance(&m.values);
    let lambda = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(res.eigenvalues.clone()));
    let rebuilt = &res.loadings * lambda * res.loadings.transpose();
    let cov_err = (rebuilt - &cov).amax();
    let explained_err = (res.explained.iter().sum::<f64>() - 1.0).abs();

    let mut order: Vec<usize> = (0..m.values.nrows()).collect();
    order.shuffle(&mut r);
    let mut shuffled = m.clone();
    shuffled.values = m.values.select_rows(&order);
    shuffled.ids = order.iter().map(|&i| m.ids[i].clone()).collect();
    let res2 = pca(&shuffled, None).unwrap();
    let eig_diff = max_abs_err(&res.eigenvalues, &res2.eigenvalues);
    let load_diff = (&res.loadings - &res2.loadings).amax();
    let score_diff = (res.scores.select_rows(&order) - &res2.scores).amax();
    let order_diff = eig_diff.max(load_diff).max(score_diff);
    check(
        cov_err < 1e-10 && explained_err <= 1e-12 && order_diff < 1e-10,
        format!(
            "covariance reconstruction {cov_err:.2e} (tol 1e-10), |sum explained - 1| \
             {explained_err:.2e} (tol 1e-12), row-order change {order_diff:.2e}"
        ),
    )
}

/// Published sample means and standard deviations, canonical key order.
const SAMPLE_MEAN: [f64; 11] = [
    0.171, 3.246, -2.102, 1.666, -0.812, -0.182, 0.230, -0.591, 0.631, 0.179, -0.134,
];
const SAMPLE_SD: [f64; 11] = [
    0.322, 1.289, 0.638, 0.411, 0.333, 0.164, 0.217, 0.490, 0.286, 0.222, 0.135,
];

fn load_sample(path: &str, design: &Arc<FactorDesign>) -> Result<CubeSample, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or("no records")?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let pos = |name: &str| {
        cols.iter()
            .position(|c| *c == name)
            .ok_or_else(|| format!("missing column {name}"))
    };
    let (id, value) = (pos("id")?, pos("value")?);
    let levels = [pos("gender")?, pos("contract")?, pos("age")?];
    let mut groups: Vec<(String, Vec<CellRecord>)> = Vec::new();
    for (n, line) in lines {
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        let x: f64 = f[value]
            .parse()
            .map_err(|e| format!("line {}: {e}", n + 1))?;
        let mut rec = CellRecord::new(&levels.map(|i| f[i]), x);
        rec.line = Some(n as u64 + 1);
        match groups.iter_mut().find(|(g, _)| g == f[id]) {
            Some((_, recs)) => recs.push(rec),
            None => groups.push((f[id].to_string(), vec![rec])),
        }
    }
    let cubes = groups
        .into_iter()
        .map(|(g, recs)| {
            KCube::from_long_records(design.clone(), &recs)
                .map(|c| c.with_id(g))
                .map_err(|e| e.to_string())
        })
        .collect::<Result<Vec<_>, _>>()?;
    CubeSample::new(cubes).map_err(|e| e.to_string())
}

fn sample_table() -> Outcome {
    let Ok(path) = std::env::var("CODACUBE_SAMPLE_CSV") else {
        return Outcome::Skip(
            "external 32-country dataset not supplied (set CODACUBE_SAMPLE_CSV)".into(),
        );
    };
    let design = czech_design();
    let sample = match load_sample(&path, &design) {
        Ok(s) => s,
        Err(e) => return Outcome::Fail(e),
    };
    let m = coordinate_matrix(&sample, &build_contrast_matrix(&design), true).unwrap();
    let stats = mean_sd(&m.values).unwrap();
    let means: Vec<f64> = stats.iter().map(|s| s.mean).collect();
    let sds: Vec<f64> = stats.iter().map(|s| s.sd).collect();
    let (em, es) = (
        max_abs_err(&means, &SAMPLE_MEAN),
        max_abs_err(&sds, &SAMPLE_SD),
    );
    check(
        em <= 0.001 && es <= 0.001,
        format!(
            "{} cubes: max mean error {em:.4}, max sd error {es:.4} (tol 1e-3)",
            sample.len()
        ),
    )
}

type Criterion<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn main() -> ExitCode {
    let cubes = decomposition_cubes();
    let criteria: Vec<(&str, Criterion)> = vec![
        ("golden worked example", Box::new(golden_example)),
        ("unnormalized readouts", Box::new(unnormalized_readouts)),
        ("orthonormality", Box::new(orthonormality)),
        ("round trip", Box::new(round_trip)),
        ("decomposition", Box::new(|| decomposition_suite(&cubes))),
        (
            "dimension accounting",
            Box::new(|| dimension_accounting(&cubes)),
        ),
        ("coordinate additivity", Box::new(|| additivity(&cubes))),
        ("two-factor regression", Box::new(two_factor_regression)),
        ("bootstrap", Box::new(bootstrap)),
        ("pca", Box::new(pca_suite)),
        ("sample table", Box::new(sample_table)),
    ];
    let mut failed = 0;
    for (name, run) in &criteria {
        match run() {
            Outcome::Pass(d) => println!("PASS  {name}: {d}"),
            Outcome::Skip(d) => println!("SKIP  {name}: {d}"),
            Outcome::Fail(d) => {
                failed += 1;
                println!("FAIL  {name}: {d}");
            }
        }
    }
    println!("acceptance: {} criteria, {failed} failed", criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
