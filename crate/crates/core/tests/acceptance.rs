//! Acceptance gate: one PASS/FAIL line per criterion.
//!
//! Criteria 6 and 7 need the combined red/white wine quality CSV, passed via
//! `IMPARTIAL_WINE_CSV` (comma separated, a `type` column with `red`/`white`,
//! a `quality` column, the remaining columns numeric). `IMPARTIAL_WINE_SCHEMA`
//! may point at a schema file; otherwise one is derived from the header.
//! Without the data those two criteria report FAIL and are not asserted.

mod common;

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use common::{block_sizes, cell_values, loan_design, random_design, rel_err};
use impartial::dataset::{encode, encode_raw, load_csv, Column, Dataset, Schema};
use impartial::decomposition::{decompose, decompose_coefficients, DecompositionMode};
use impartial::estimators::{
    correct_blackbox, fit_total, predict, residualize_suspect, EstimatorVariant,
};
use impartial::harness::{
    gen_dag, inject_bias, kfold_validate, BiasSpec, DagSpec,
    ExperimentConfig, ExperimentTable, Fairness, Method, Metric,
};
use impartial::linalg::{dot, mean, project, Matrix};
use impartial::metrics::{
    discrimination_score, impartiality_breakdown, impartiality_score, rsse, ImpartialityMode,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

enum Status {
    Pass,
    Fail,
    /// Failing because an input is missing in this environment.
    Unavailable,
}

struct Outcome {
    status: Status,
    detail: String,
}

impl Outcome {
    fn check(ok: bool, detail: String) -> Outcome {
        Outcome {
            status: if ok { Status::Pass } else { Status::Fail },
            detail,
        }
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn table_one() -> Outcome {
    let (result, elapsed) = timed(|| {
        let d = loan_design();
        let susp = d.all_as_suspect();
        let fit = fit_total(&d).unwrap();
        let sfit = fit_total(&susp).unwrap();
        // (row, prediction, cells, cell tolerance, DS, RSSE); the marginal
        // row is printed rounded, hence its wider tolerance
        let rows = [
            ("Full", predict(&fit, &d, EstimatorVariant::Full), [0.5, 0.4, 0.2, 0.1], 0.005, -0.25, 13.84),
            ("Exclude s", predict(&fit, &d, EstimatorVariant::ExcludeS), [0.475, 0.475, 0.125, 0.125], 0.005, -0.17, 13.91),
            ("FEO", predict(&fit, &d, EstimatorVariant::Feo), [0.455, 0.455, 0.155, 0.155], 0.005, -0.15, 13.93),
            ("SEO", predict(&sfit, &susp, EstimatorVariant::Fseo), [0.39, 0.535, 0.09, 0.235], 0.005, 0.0, 14.37),
            ("Marginal", predict(&fit, &d, EstimatorVariant::Marginal), [0.35; 4], 0.02, 0.0, 14.93),
        ];
        let mut ok = true;
        let mut worst = (0.0f64, 0.0f64, 0.0f64);
        for (name, pred, cells, tol, ds_ref, rsse_ref) in rows {
            let p = pred.unwrap().values;
            let got = cell_values(&p);
            let cell_err = got.iter().zip(cells).map(|(g, w)| (g - w).abs()).fold(0.0, f64::max);
            let ds = discrimination_score(&p, &d.group_labels, "plus", "minus").unwrap();
            let r = rsse(&p, &d.y).unwrap();
            let (e_ds, e_r) = ((ds - ds_ref).abs(), (r - rsse_ref).abs());
            if cell_err > tol || e_ds > 0.01 || e_r > 0.02 {
                ok = false;
                eprintln!("  table 1 row {name}: cells {got:?} DS {ds:.4} RSSE {r:.4}");
            }
            worst = (worst.0.max(cell_err), worst.1.max(e_ds), worst.2.max(e_r));
        }
        (ok, worst)
    });
    let (ok, worst) = result;
    Outcome::check(
        ok && elapsed < Duration::from_secs(1),
        format!(
            "max errors: cells {:.4}, DS {:.4}, RSSE {:.4}; {:.0?}",
            worst.0, worst.1, worst.2, elapsed
        ),
    )
}

fn algebraic_identities() -> Outcome {
    let (worst, elapsed) = timed(|| {
        let (mut eq5, mut sum, mut proj) = (0.0f64, 0.0f64, 0.0f64);
        for i in 0..100u64 {
            let (ps, px, pw) = block_sizes(i);
            let d = random_design(1000 + i, 200, ps, px.max(1), pw);
            let fit = fit_total(&d).unwrap();
            let full = predict(&fit, &d, EstimatorVariant::Full).unwrap().values;

            // coefficient identity on the same data without the suspect block
            let mut feo_design = d.clone();
            feo_design.w = Matrix::empty(d.rows());
            feo_design.labels.w.clear();
            feo_design.means.w.clear();
            let ffit = fit_total(&feo_design).unwrap();
            let c = decompose_coefficients(&ffit, &feo_design).unwrap();
            let direct_plus_indirect: Vec<f64> =
                c.direct.iter().zip(&c.indirect).map(|(a, b)| a + b).collect();
            eq5 = eq5.max(rel_err(&direct_plus_indirect, &c.marginal));

            let mut modes = vec![(DecompositionMode::Total, &fit, &d, full.clone())];
            let ffull = predict(&ffit, &feo_design, EstimatorVariant::Full).unwrap().values;
            modes.push((DecompositionMode::Feo, &ffit, &feo_design, ffull));
            for (mode, f, design, target) in modes {
                let r = decompose(f, design, mode).unwrap();
                sum = sum.max(rel_err(&r.total(), &target));
            }

            let basis = Matrix::hcat(&[&d.s, &d.x]).unwrap();
            let target = Matrix::hcat(&[&Matrix::column_vector(d.y.clone()), &d.w]).unwrap();
            let pair = project(&basis, &target).unwrap();
            let again = project(&basis, &pair.projected).unwrap();
            for j in 0..target.cols() {
                proj = proj.max(rel_err(again.projected.col(j), pair.projected.col(j)));
                let scale = dot(target.col(j), target.col(j)).sqrt().max(1.0);
                for col in basis.columns() {
                    let norm = dot(col, col).sqrt().max(1.0);
                    proj = proj.max(dot(col, pair.orthogonal.col(j)).abs() / (scale * norm));
                }
            }
        }
        (eq5, sum, proj)
    });
    let (eq5, sum, proj) = worst;
    Outcome::check(
        eq5 <= 1e-8 && sum <= 1e-8 && proj <= 1e-8 && elapsed < Duration::from_secs(5),
        format!("coef {eq5:.1e}, sum {sum:.1e}, projection {proj:.1e}; {elapsed:.0?}"),
    )
}

fn construction_guarantees() -> Outcome {
    let mut worst_is = 0.0f64;
    let mut worst_ds = 0.0f64;
    let mut indifferent = true;
    for i in 0..20u64 {
        let (_, px, pw) = block_sizes(i);
        let (data, schema) = common::random_data(2000 + i, 300, 1, px.max(1), pw.max(1));
        let d = encode(&data, &schema).unwrap();

        let legit = d.all_as_legitimate();
        let f = fit_total(&legit).unwrap();
        let feo = predict(&f, &legit, EstimatorVariant::Feo).unwrap().values;
        worst_is = worst_is.max(impartiality_score(&feo, &legit, &d.y, ImpartialityMode::Feo).unwrap());

        let susp = d.all_as_suspect();
        let f = fit_total(&susp).unwrap();
        let fseo = predict(&f, &susp, EstimatorVariant::Fseo).unwrap().values;
        worst_is = worst_is.max(impartiality_score(&fseo, &susp, &d.y, ImpartialityMode::Seo).unwrap());
        let ds = discrimination_score(&fseo, &d.group_labels, "1", "0").unwrap();
        worst_ds = worst_ds.max(ds.abs());

        let f = fit_total(&d).unwrap();
        let total = predict(&f, &d, EstimatorVariant::Total).unwrap().values;
        worst_is = worst_is.max(impartiality_score(&total, &d, &d.y, ImpartialityMode::Seo).unwrap());

        let ext = Matrix::column_vector(d.y.iter().map(|v| (0.7 * v).sin() + 0.2 * v * v).collect());
        let (_, corrected) = correct_blackbox(&d, &ext).unwrap();
        let with_b = d.with_blackbox(&ext, vec!["bb".into()], None).unwrap();
        worst_is = worst_is
            .max(impartiality_score(&corrected.values, &with_b, &d.y, ImpartialityMode::Seo).unwrap());

        // flip every third sensitive value and predict with training transforms
        let mut s = data.numeric("s0").unwrap().to_vec();
        for v in s.iter_mut().step_by(3) {
            *v = 1.0 - *v;
        }
        let flipped = data.with_column("s0", Column::Numeric(s)).unwrap();
        let raw_legit = encode_raw(&flipped, &schema).unwrap().all_as_legitimate();
        let fd = raw_legit.centered_with(&legit.means).unwrap();
        let legit_fit = fit_total(&legit).unwrap();
        let again = predict(&legit_fit, &fd, EstimatorVariant::Feo).unwrap().values;
        indifferent &= again == feo;
    }
    Outcome::check(
        worst_is <= 1e-8 && worst_ds <= 1e-10 && indifferent,
        format!("max IS {worst_is:.1e}, max |DS| {worst_ds:.1e}, FEO indifferent: {indifferent}"),
    )
}

fn residualize_equivalence() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..100u64 {
        let (ps, px, pw) = block_sizes(i);
        let d = random_design(3000 + i, 200, ps, px, pw.max(1));
        let fit = fit_total(&d).unwrap();
        let refit = fit_total(&residualize_suspect(&d).unwrap()).unwrap();
        worst = worst.max(rel_err(&refit.beta_x[d.x.cols()..], &fit.beta_w));
    }
    Outcome::check(worst <= 1e-8, format!("max relative change {worst:.1e}"))
}

fn residual_conditions() -> Outcome {
    let mut worst = 0.0f64;
    for (k, (ps, px, pw)) in [(1, 1, 1), (1, 2, 1), (2, 2, 2), (1, 3, 2), (3, 2, 3)].into_iter().enumerate() {
        let spec = DagSpec::standard(2000, ps, px, pw, Fairness::Fair, 4000 + k as u64);
        let sim = gen_dag(&spec).unwrap();
        let d = encode(&sim.data, &sim.schema).unwrap();
        let fit = fit_total(&d).unwrap();
        let total = predict(&fit, &d, EstimatorVariant::Total).unwrap().values;
        let b = impartiality_breakdown(&total, &d, &d.y, ImpartialityMode::Seo).unwrap();
        let terms = std::iter::once(b.mean_term).chain(b.legitimate).chain(b.suspect);
        worst = worst.max(terms.fold(0.0, f64::max));
    }
    Outcome::check(worst <= 1e-8, format!("max discrepancy {worst:.1e}"))
}

fn load_wine() -> Option<(Dataset, Schema)> {
    let path = std::env::var_os("IMPARTIAL_WINE_CSV")?;
    let schema = match std::env::var_os("IMPARTIAL_WINE_SCHEMA") {
        Some(s) => Schema::from_file(s).expect("wine schema"),
        None => {
            let mut reader = csv::Reader::from_path(&path).expect("wine CSV");
            let mut text = String::new();
            for name in reader.headers().expect("wine header") {
                let role = match name {
                    "quality" => "response",
                    "type" => "sensitive, categorical",
                    _ => "legitimate",
                };
                writeln!(text, "{name} = {role}").unwrap();
            }
            Schema::parse(&text).expect("derived wine schema")
        }
    };
    Some((load_csv(&path, &schema).expect("wine data"), schema))
}

fn unavailable() -> Outcome {
    Outcome {
        status: Status::Unavailable,
        detail: "wine data not supplied (set IMPARTIAL_WINE_CSV)".into(),
    }
}

fn white_bias(seed: u64) -> BiasSpec {
    BiasSpec {
        target_group: "white".into(),
        fraction: 0.7,
        shift: 1.0,
        seed,
    }
}

fn wine_protocol(wine: Option<&(Dataset, Schema)>) -> Outcome {
    let Some((data, schema)) = wine else {
        return unavailable();
    };
    let ((linear, black), elapsed) = timed(|| {
        let linear = kfold_validate(data, schema, &ExperimentConfig::linear(2017), &white_bias(2017)).unwrap();
        let black =
            kfold_validate(data, schema, &ExperimentConfig::black_box(2017), &white_bias(2017)).unwrap();
        (linear, black)
    });
    print!("{}", linear.to_text());
    print!("{}", black.to_text());
    let get = |t: &ExperimentTable, m: Method, k: Metric| t.get(m).unwrap().metric(k);
    let mut misses = Vec::new();
    for (m, refs) in [
        (Method::Ols, [0.84, 0.95, 0.94]),
        (Method::FormalEo, [0.85, 0.92, 0.60]),
        (Method::SubstantiveEo, [0.93, 0.91, 0.00]),
    ] {
        for (k, (metric, tol)) in [(Metric::RmseBiased, 0.03), (Metric::RmseRaw, 0.03), (Metric::Ds, 0.05)]
            .into_iter()
            .enumerate()
        {
            let v = get(&linear, m, metric);
            if (v - refs[k]).abs() > tol {
                misses.push(format!("{} {} {v:.3} vs {}", m.title(), metric.name(), refs[k]));
            }
        }
    }
    let (seo, cal, ols) = (
        get(&linear, Method::SubstantiveEo, Metric::Ds),
        get(&linear, Method::Calders, Metric::Ds),
        get(&linear, Method::Ols, Metric::Ds),
    );
    if !(seo < cal && cal < ols) {
        misses.push(format!("Calders DS {cal:.3} not between {seo:.3} and {ols:.3}"));
    }
    let corrected = black.get(Method::SubstantiveEoTrees).unwrap();
    let marginal = get(&black, Method::Marginal, Metric::RmseRaw);
    if corrected.metric(Metric::Ds).abs() > 0.01 || corrected.metric(Metric::Is) > 0.01 {
        misses.push("corrected black box not impartial".into());
    }
    if corrected.metric(Metric::RmseRaw) >= marginal {
        misses.push(format!(
            "corrected RMSE-raw {:.3} not below marginal {marginal:.3}",
            corrected.metric(Metric::RmseRaw)
        ));
    }
    if elapsed >= Duration::from_secs(120) {
        misses.push(format!("took {elapsed:.0?}"));
    }
    Outcome::check(
        misses.is_empty(),
        if misses.is_empty() {
            format!("{elapsed:.0?}")
        } else {
            misses.join("; ")
        },
    )
}

fn bias_mechanics(wine: Option<&(Dataset, Schema)>) -> Outcome {
    let Some((data, schema)) = wine else {
        return unavailable();
    };
    let raw = encode(data, schema).unwrap();
    // the indicator may code either wine type depending on row order
    let sign = if raw.labels.s[0].ends_with("white") { 1.0 } else { -1.0 };
    let base = fit_total(&raw).unwrap();
    let sd: Vec<f64> = raw.x.columns().map(|c| (dot(c, c) / c.len() as f64).sqrt()).collect();
    let draws = 100;
    let mut ds = 0.0;
    let mut dx = vec![0.0; sd.len()];
    for r in 0..draws {
        let biased = inject_bias(data, schema, &white_bias(r)).unwrap();
        let fit = fit_total(&encode(&biased, schema).unwrap()).unwrap();
        ds += sign * (fit.beta_s[0] - base.beta_s[0]);
        for (k, (a, b)) in fit.beta_x.iter().zip(&base.beta_x).enumerate() {
            dx[k] += (a - b) * sd[k];
        }
    }
    let ds = ds / draws as f64;
    let dx = dx.iter().map(|v| (v / draws as f64).abs()).sum::<f64>() / dx.len() as f64;
    Outcome::check(
        (ds - 0.7).abs() <= 0.07 && dx < 0.05,
        format!("sensitive shift {ds:.3}, other coefficients {dx:.4} per sd"),
    )
}

fn noise_robustness() -> Outcome {
    let spec = DagSpec::standard(100_000, 1, 2, 2, Fairness::Unrestricted, 8);
    let sim = gen_dag(&spec).unwrap();
    let d = encode(&sim.data, &sim.schema).unwrap();
    let fit = fit_total(&d).unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for variant in [EstimatorVariant::Full, EstimatorVariant::Total, EstimatorVariant::ExcludeS] {
        let p = predict(&fit, &d, variant).unwrap().values;
        let m = mean(&p);
        let sd = (p.iter().map(|v| (v - m).powi(2)).sum::<f64>() / p.len() as f64).sqrt();
        let noisy: Vec<f64> = p
            .iter()
            .map(|v| v + 0.1 * sd * r.sample::<f64, _>(StandardNormal))
            .collect();
        let a = impartiality_score(&p, &d, &d.y, ImpartialityMode::Seo).unwrap();
        let b = impartiality_score(&noisy, &d, &d.y, ImpartialityMode::Seo).unwrap();
        worst = worst.max((a - b).abs());
    }
    Outcome::check(worst < 0.01, format!("max IS change {worst:.2e}"))
}

fn main() {
    let wine = load_wine();
    let criteria: [(&str, Box<dyn Fn() -> Outcome>); 8] = [
        ("loan example golden values", Box::new(table_one)),
        ("algebraic identities on random designs", Box::new(algebraic_identities)),
        ("construction guarantees", Box::new(construction_guarantees)),
        ("residualize-then-refit equivalence", Box::new(residualize_equivalence)),
        ("residual moment conditions on fair DAGs", Box::new(residual_conditions)),
        ("wine protocol", Box::new(|| wine_protocol(wine.as_ref()))),
        ("bias mechanics on wine data", Box::new(|| bias_mechanics(wine.as_ref()))),
        ("noise robustness", Box::new(noise_robustness)),
    ];
    let mut failed = Vec::new();
    for (k, (name, run)) in criteria.iter().enumerate() {
        let outcome = run();
        let tag = match outcome.status {
            Status::Pass => "PASS",
            Status::Fail => {
                failed.push(k + 1);
                "FAIL"
            }
            Status::Unavailable => "FAIL",
        };
        println!("{tag} {} {name}: {}", k + 1, outcome.detail);
    }
    if !failed.is_empty() {
        eprintln!("criteria failed: {failed:?}");
        std::process::exit(1);
    }
}
