use std::path::Path;
use std::sync::Arc;

use coda_cube::{
    bootstrap_ci, build_contrast_matrix, coordinate_matrix, coords as coordinates, mean_sd,
    transform_logcontrasts, BootstrapConfig, CoordinateMatrix, FactorDesign, FactorSubset, KCube,
    Part,
};

use crate::config::AnalysisConfig;
use crate::failure::{Failure, Outcome};
use crate::input::{load_matrix, load_sample, LoadedSample};
use crate::output::{check_targets, csv_writer, finish, num, prepare_dir, write_row};
use crate::{Io, Selection};

struct Loaded {
    config: AnalysisConfig,
    design: Arc<FactorDesign>,
    data: LoadedSample,
}

fn load(io: &Io) -> Outcome<Loaded> {
    let config = AnalysisConfig::load(&io.config)?;
    let design = config.design()?;
    let data = load_sample(&io.input, &design)?;
    Ok(Loaded {
        config,
        design,
        data,
    })
}

fn groups(design: &FactorDesign, labels: &[String]) -> Outcome<Option<Vec<FactorSubset>>> {
    if labels.is_empty() {
        return Ok(None);
    }
    design
        .parse_groups(labels)
        .map(Some)
        .map_err(Failure::input)
}

fn matrix(l: &Loaded, sel: &Selection, pca_default: bool) -> Outcome<CoordinateMatrix> {
    let normalized = l.config.options.normalized && !sel.no_norm;
    let v = build_contrast_matrix(&l.design);
    let m = coordinate_matrix(&l.data.sample, &v, normalized).map_err(Failure::other)?;
    let labels = if sel.groups.is_empty() && pca_default {
        &l.config.options.pca.groups
    } else {
        &sel.groups
    };
    Ok(match groups(&l.design, labels)? {
        Some(g) => m.select(&g),
        None => m,
    })
}

pub fn coords(io: &Io, sel: &Selection) -> Outcome<()> {
    let l = load(io)?;
    let m = matrix(&l, sel, false)?;
    let mut w = csv_writer(io.out.as_deref(), io.force)?;
    let header =
        std::iter::once("id".to_string()).chain(m.keys.iter().map(|k| l.design.key_label(k)));
    write_row(&mut w, header)?;
    for (i, id) in m.ids.iter().enumerate() {
        let row = m.values.row(i);
        write_row(
            &mut w,
            std::iter::once(id.clone()).chain(row.iter().map(|&x| num(x))),
        )?;
    }
    finish(w)
}

fn write_cube(w: &mut crate::output::CsvOut, cube: &KCube, id: Option<&str>) -> Outcome<()> {
    let design = cube.design();
    for (flat, &x) in cube.values().iter().enumerate() {
        let fields = id
            .map(str::to_string)
            .into_iter()
            .chain(design.cell_names(flat))
            .chain(std::iter::once(num(x)));
        write_row(w, fields)?;
    }
    Ok(())
}

fn cube_header(design: &FactorDesign, with_id: bool) -> Vec<String> {
    let mut h: Vec<String> = Vec::new();
    if with_id {
        h.push("id".into());
    }
    h.extend(design.factors().iter().map(|f| f.name().to_string()));
    h.push("value".into());
    h
}

pub fn decompose(io: &Io, part: &str, closed: bool) -> Outcome<()> {
    let l = load(io)?;
    let d = &l.design;
    let selected: Vec<Part> = match part.trim() {
        "all" => std::iter::once(Part::Independent)
            .chain(
                FactorSubset::all_nonempty(d.k())
                    .into_iter()
                    .filter(|s| s.len() >= 2)
                    .map(Part::Interaction),
            )
            .collect(),
        "ind" => vec![Part::Independent],
        label => {
            let s = d.parse_group(label).map_err(Failure::input)?;
            if s.len() < 2 {
                return Err(Failure::input(format!(
                    "unknown part `{label}`: expected `all`, `ind` or an interaction label"
                )));
            }
            vec![Part::Interaction(s)]
        }
    };
    let decomposed: Vec<_> = l.data.sample.cubes().iter().map(KCube::decompose).collect();
    let kappa = l.config.options.closure;
    let ids = l.data.sample.ids();
    let with_id = l.data.has_id;

    let emit = |w: &mut crate::output::CsvOut, p: &Part| -> Outcome<()> {
        write_row(w, cube_header(d, with_id))?;
        for (dec, id) in decomposed.iter().zip(ids) {
            let cube = dec.get(p).expect("selected part exists");
            let cube = if closed {
                cube.closed(kappa).map_err(Failure::other)?
            } else {
                cube.clone()
            };
            write_cube(w, &cube, with_id.then_some(id.as_str()))?;
        }
        Ok(())
    };

    if part.trim() == "all" {
        let dir = io.out.as_deref().ok_or_else(|| {
            Failure::input("--part all writes one file per part and needs --out <directory>")
        })?;
        let paths: Vec<_> = selected
            .iter()
            .map(|p| dir.join(format!("{}.csv", p.label(d))))
            .collect();
        check_targets(&paths, io.force)?;
        prepare_dir(dir)?;
        for (p, path) in selected.iter().zip(&paths) {
            let mut w = csv_writer(Some(path), io.force)?;
            emit(&mut w, p)?;
            finish(w)?;
        }
        Ok(())
    } else {
        let mut w = csv_writer(io.out.as_deref(), io.force)?;
        emit(&mut w, &selected[0])?;
        finish(w)
    }
}

pub fn sample_stats(
    io: &Io,
    sel: &Selection,
    resamples: Option<usize>,
    alpha: Option<f64>,
    seed: Option<u64>,
) -> Outcome<()> {
    let l = load(io)?;
    let m = matrix(&l, sel, false)?;
    let b = &l.config.options.bootstrap;
    let config = BootstrapConfig {
        resamples: resamples.unwrap_or(b.resamples),
        alpha: alpha.unwrap_or(b.alpha),
        seed: seed.unwrap_or(b.seed),
    };
    config.validate().map_err(Failure::input)?;
    mean_sd(&m.values).map_err(Failure::input)?;
    let ci = bootstrap_ci(&m.values, config).map_err(Failure::input)?;
    let mut w = csv_writer(io.out.as_deref(), io.force)?;
    write_row(&mut w, ["key", "mean", "sd", "lower", "upper"])?;
    for (k, e) in m.keys.iter().zip(&ci.entries) {
        write_row(
            &mut w,
            [
                l.design.key_label(k),
                num(e.mean),
                num(e.sd),
                num(e.lower),
                num(e.upper),
            ],
        )?;
    }
    finish(w)
}

pub fn pca(io: &Io, sel: &Selection) -> Outcome<()> {
    let dir = io
        .out
        .as_deref()
        .ok_or_else(|| Failure::input("pca writes three files and needs --out <directory>"))?;
    let l = load(io)?;
    let m = matrix(&l, sel, true)?;
    let res = coda_cube::pca(&m, None).map_err(Failure::input)?;
    if res.degenerate {
        eprintln!("warning: total variance is zero; explained fractions are reported as 0");
    }
    for &c in &res.zero_variance {
        eprintln!(
            "warning: coordinate {} has zero variance",
            l.design.key_label(&res.keys[c])
        );
    }

    let paths: Vec<_> = ["loadings.csv", "scores.csv", "variance.csv"]
        .iter()
        .map(|f| dir.join(f))
        .collect();
    check_targets(&paths, io.force)?;
    prepare_dir(dir)?;
    let pcs: Vec<String> = (1..=res.eigenvalues.len())
        .map(|c| format!("PC{c}"))
        .collect();

    let mut w = csv_writer(Some(&paths[0]), io.force)?;
    write_row(
        &mut w,
        std::iter::once("key".to_string()).chain(pcs.iter().cloned()),
    )?;
    for (i, k) in res.keys.iter().enumerate() {
        let row = res.loadings.row(i);
        write_row(
            &mut w,
            std::iter::once(l.design.key_label(k)).chain(row.iter().map(|&x| num(x))),
        )?;
    }
    finish(w)?;

    let mut w = csv_writer(Some(&paths[1]), io.force)?;
    write_row(
        &mut w,
        std::iter::once("id".to_string()).chain(pcs.iter().cloned()),
    )?;
    for (i, id) in res.ids.iter().enumerate() {
        let row = res.scores.row(i);
        write_row(
            &mut w,
            std::iter::once(id.clone()).chain(row.iter().map(|&x| num(x))),
        )?;
    }
    finish(w)?;

    let mut w = csv_writer(Some(&paths[2]), io.force)?;
    write_row(&mut w, ["component", "eigenvalue", "explained"])?;
    for (c, (e, f)) in pcs.iter().zip(res.eigenvalues.iter().zip(&res.explained)) {
        write_row(&mut w, [c.clone(), num(*e), num(*f)])?;
    }
    finish(w)
}

pub fn contrast_matrix(
    config: &Path,
    out: Option<&Path>,
    force: bool,
    verify: bool,
) -> Outcome<()> {
    let design = AnalysisConfig::load(config)?.design()?;
    let v = build_contrast_matrix(&design);
    let mut w = csv_writer(out, force)?;
    let header = std::iter::once("key".to_string())
        .chain((0..design.cell_count()).map(|f| design.cell_label(f)));
    write_row(&mut w, header)?;
    for (i, k) in v.keys().iter().enumerate() {
        write_row(
            &mut w,
            std::iter::once(design.key_label(k)).chain(v.row(i).into_iter().map(num)),
        )?;
    }
    finish(w)?;
    if verify {
        eprintln!("max |V V' - I| = {:e}", v.orthonormality_error());
        eprintln!("max |row sum| = {:e}", v.max_row_sum());
    }
    Ok(())
}

pub fn transform(io: &Io, matrix_path: &Path) -> Outcome<()> {
    let l = load(io)?;
    let (names, t) = load_matrix(matrix_path, &l.design)?;
    let v = build_contrast_matrix(&l.design);
    let mut w = csv_writer(io.out.as_deref(), io.force)?;
    write_row(
        &mut w,
        std::iter::once("id".to_string()).chain(names.iter().cloned()),
    )?;
    for (cube, id) in l.data.sample.cubes().iter().zip(l.data.sample.ids()) {
        let z = coordinates(cube, &v, true).map_err(Failure::other)?;
        let r = transform_logcontrasts(&t, &v, &z)
            .map_err(|e| Failure::input(format!("{}: {e}", matrix_path.display())))?;
        write_row(
            &mut w,
            std::iter::once(id.clone()).chain(r.iter().map(|&x| num(x))),
        )?;
    }
    finish(w)
}
