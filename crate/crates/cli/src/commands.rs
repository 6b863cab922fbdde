use std::io::Write;
use std::path::Path;

use impartial::dataset::{encode, EncodedDesign};
use impartial::decomposition::{decompose as run_decomposition, redlining_report};
use impartial::estimators::{correct_blackbox, fit_total, predict, EstimatorVariant};
use impartial::format::{csv_number, table_number};
use impartial::harness::{
    gen_dag, gen_simple_example, gen_wine_like, kfold_validate, BaggedTrees, BiasSpec, DagSpec,
    ExperimentConfig, Fairness, Simulated, TreeConfig, WineLikeSpec,
};
use impartial::linalg::Matrix;
use impartial::metrics::{default_group_pair, ImpartialityMode, MetricsReport};
use impartial::{Error, Result};
use log::info;

use crate::io::{load, read_predictions, sink};
use crate::{
    AuditArgs, CorrectArgs, DagOptions, DecomposeArgs, FitArgs, Generator, GroupPair, RoleView,
    SimulateArgs, ValidateArgs,
};

fn write_predictions(
    out: Option<&Path>,
    design: &EncodedDesign,
    header: &str,
    values: &[f64],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink(out)?);
    w.write_record(["row", "group", header])?;
    for (i, (g, v)) in design.group_labels.iter().zip(values).enumerate() {
        w.write_record([(i + 1).to_string(), g.clone(), csv_number(*v)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn fit(args: FitArgs) -> Result<()> {
    let loaded = load(&args.input.data, &args.input.schema)?;
    let fit = fit_total(&loaded.design)?;
    let pred = predict(&fit, &loaded.design, args.variant)?;

    let table = fit.coefficient_table();
    if let Some(path) = &args.coef_out {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["block", "column", "value"])?;
        for (block, name, v) in &table {
            w.write_record([block, name.as_str(), &csv_number(*v)])?;
        }
        w.flush()?;
    }
    let mut report = format!(
        "variant {} | n = {} | rank {} | fingerprint {}\n",
        args.variant, fit.n, fit.rank, fit.fingerprint
    );
    for (block, name, v) in &table {
        report.push_str(&format!("{block:<11} {name:<24} {}\n", table_number(*v)));
    }
    if !fit.dropped.is_empty() {
        report.push_str(&format!("aliased: {}\n", fit.dropped.join(", ")));
    }
    match &args.out {
        Some(path) => {
            print!("{report}");
            write_predictions(Some(path), &loaded.design, "prediction", &pred.values)
        }
        None => {
            eprint!("{report}");
            write_predictions(None, &loaded.design, "prediction", &pred.values)
        }
    }
}

fn group_pair(groups: &GroupPair, design: &EncodedDesign) -> Option<(String, String)> {
    match (&groups.positive, &groups.negative) {
        (Some(p), Some(n)) => Some((p.clone(), n.clone())),
        _ => default_group_pair(&design.group_labels),
    }
}

fn render_report(r: &MetricsReport, pair: &(String, String)) -> String {
    let mut s = String::new();
    s.push_str(&format!("n       {}\n", r.n));
    s.push_str(&format!("RMSE    {}\n", table_number(r.rmse)));
    s.push_str(&format!("RSSE    {}\n", table_number(r.rsse)));
    s.push_str(&format!(
        "DS      {}  ({} - {})\n",
        table_number(r.ds),
        pair.0,
        pair.1
    ));
    s.push_str(&format!("IS      {}  ({})\n", table_number(r.is_score), r.is_mode));
    for (g, m) in &r.per_group_means {
        s.push_str(&format!("mean[{g}]  {}\n", table_number(*m)));
    }
    s
}

fn write_report(out: Option<&Path>, r: &MetricsReport) -> Result<()> {
    let Some(path) = out else { return Ok(()) };
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["metric", "group", "value"])?;
    for (name, v) in [
        ("rmse", r.rmse),
        ("rsse", r.rsse),
        ("ds", r.ds),
        ("is", r.is_score),
        ("n", r.n as f64),
    ] {
        w.write_record([name, "", &csv_number(v)])?;
    }
    for (g, m) in &r.per_group_means {
        w.write_record(["group_mean", g, &csv_number(*m)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn audit(args: AuditArgs) -> Result<()> {
    if args.predictions.is_none() && args.variant.is_none() {
        return Err(Error::Config(
            "audit needs --predictions FILE or --variant NAME".into(),
        ));
    }
    let loaded = load(&args.input.data, &args.input.schema)?;
    let design = &loaded.design;
    let (values, default_mode) = match (&args.predictions, args.variant) {
        (Some(path), _) => (read_predictions(path, design.rows())?, ImpartialityMode::Seo),
        (None, Some(v)) => {
            let fit = fit_total(design)?;
            let mode = if v == EstimatorVariant::Feo {
                ImpartialityMode::Feo
            } else {
                ImpartialityMode::Seo
            };
            (predict(&fit, design, v)?.values, mode)
        }
        (None, None) => unreachable!("checked above"),
    };
    let mode = args.mode.unwrap_or(default_mode);
    let pair = group_pair(&args.groups, design)
        .ok_or_else(|| Error::EmptyDesign("no rows to audit".into()))?;
    let report = MetricsReport::compute(
        &values,
        &design.y,
        design,
        mode,
        Some((pair.0.as_str(), pair.1.as_str())),
    )?;
    print!("{}", render_report(&report, &pair));
    write_report(args.out.as_deref(), &report)
}

pub fn decompose(args: DecomposeArgs) -> Result<()> {
    let loaded = load(&args.input.data, &args.input.schema)?;
    let fit = fit_total(&loaded.design)?;
    let report = run_decomposition(&fit, &loaded.design, args.mode)?;

    let mut summary = format!("mode {}\n", args.mode);
    for c in report.summary() {
        summary.push_str(&format!(
            "{:<15} sum {:>12}  rms {:>12}\n",
            c.name,
            table_number(c.sum),
            table_number(c.rms)
        ));
    }
    if let Ok(red) = redlining_report(&report) {
        summary.push_str(&format!(
            "disparate treatment {} | informative redlining {} | uninformative redlining {}\n",
            table_number(red.disparate_treatment),
            table_number(red.informative_redlining),
            table_number(red.uninformative_redlining)
        ));
    }
    if args.out.is_some() {
        print!("{summary}");
    } else {
        eprint!("{summary}");
    }

    let mut w = csv::Writer::from_writer(sink(args.out.as_deref())?);
    let mut header = vec!["row", "group"];
    header.extend(report.columns().iter().map(|(n, _)| *n));
    header.push("fitted");
    w.write_record(&header)?;
    let total = report.total();
    for i in 0..report.rows() {
        let mut rec = vec![(i + 1).to_string(), loaded.design.group_labels[i].clone()];
        rec.extend(report.columns().iter().map(|(_, c)| csv_number(c[i])));
        rec.push(csv_number(total[i]));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn correct(args: CorrectArgs) -> Result<()> {
    let loaded = load(&args.input.data, &args.input.schema)?;
    let design = match args.mode {
        RoleView::Declared => loaded.design.clone(),
        RoleView::Feo => loaded.design.all_as_legitimate(),
        RoleView::Seo => loaded.design.all_as_suspect(),
    };
    let external = match (&args.predictions, args.trees) {
        (Some(path), _) => read_predictions(path, design.rows())?,
        (None, Some(trees)) => {
            let config = TreeConfig {
                trees,
                ..TreeConfig::default()
            };
            let forest = BaggedTrees::fit(&design.full_matrix(), &design.y, config, args.seed)?;
            info!("black box: out-of-bag predictions of {trees} bagged trees");
            forest.oob_predictions().to_vec()
        }
        (None, None) => {
            return Err(Error::Config("correct needs --predictions or --trees".into()))
        }
    };
    let (_, pred) = correct_blackbox(&design, &Matrix::column_vector(external.clone()))?;

    let audited = design.with_blackbox(
        &Matrix::column_vector(external),
        vec!["blackbox_0".into()],
        None,
    )?;
    let pair = default_group_pair(&design.group_labels)
        .ok_or_else(|| Error::EmptyDesign("no rows".into()))?;
    let report = MetricsReport::compute(
        &pred.values,
        &design.y,
        &audited,
        ImpartialityMode::Seo,
        Some((pair.0.as_str(), pair.1.as_str())),
    )?;
    let summary = render_report(&report, &pair);
    match &args.out {
        Some(path) => {
            write_predictions(Some(path), &design, "prediction", &pred.values)?;
            print!("{summary}");
        }
        None => {
            write_predictions(None, &design, "prediction", &pred.values)?;
            eprint!("{summary}");
        }
    }
    Ok(())
}

fn generate(kind: Generator, dag: &DagOptions, seed: u64) -> Result<Simulated> {
    match kind {
        Generator::Simple => Ok(gen_simple_example()),
        Generator::Dag => {
            let fairness = if dag.fair {
                Fairness::Fair
            } else {
                Fairness::Unrestricted
            };
            gen_dag(&DagSpec::standard(
                dag.rows, dag.ps, dag.px, dag.pw, fairness, seed,
            ))
        }
        Generator::Wine => gen_wine_like(&WineLikeSpec {
            seed,
            ..WineLikeSpec::default()
        }),
    }
}

pub fn validate(args: ValidateArgs) -> Result<()> {
    let mut config = if args.black_box {
        ExperimentConfig::black_box(args.seed)
    } else {
        ExperimentConfig::linear(args.seed)
    };
    config.folds = args.folds;
    config.repetitions = args.reps;
    if let Some(methods) = &args.methods {
        config.methods = methods.clone();
    }
    if config.folds < 2 || config.repetitions == 0 {
        return Err(Error::Config(
            "--folds must be at least 2 and --reps at least 1".into(),
        ));
    }

    let (data, schema) = match (&args.simulate, &args.data, &args.schema) {
        (Some(kind), _, _) => {
            let sim = generate(*kind, &args.dag, args.seed)?;
            (sim.data, sim.schema)
        }
        (None, Some(d), Some(s)) => {
            let loaded = load(d, s)?;
            (loaded.data, loaded.schema)
        }
        _ => {
            return Err(Error::Config(
                "validate needs --data and --schema, or --simulate".into(),
            ))
        }
    };
    let target_group = match &args.bias_group {
        Some(g) => g.clone(),
        None => {
            let design = encode(&data, &schema)?;
            default_group_pair(&design.group_labels)
                .map(|(p, _)| p)
                .ok_or_else(|| Error::EmptyDesign("no rows".into()))?
        }
    };
    let bias = BiasSpec {
        target_group,
        fraction: args.bias_frac,
        shift: args.bias_shift,
        seed: args.seed,
    };
    let table = kfold_validate(&data, &schema, &config, &bias)?;
    println!(
        "{} repetitions x {} folds, bias: {} of group '{}' shifted by {}",
        table.repetitions,
        table.folds,
        table_number(bias.fraction),
        bias.target_group,
        table_number(bias.shift)
    );
    print!("{}", table.to_text());
    if let Some(path) = &args.out {
        table.write_csv(std::fs::File::create(path)?)?;
    }
    Ok(())
}

pub fn simulate(args: SimulateArgs) -> Result<()> {
    let sim = generate(args.generator, &args.dag, args.seed)?;
    let schema_path = args
        .schema
        .clone()
        .unwrap_or_else(|| args.out.with_extension("schema"));
    sim.data.write_csv(std::fs::File::create(&args.out)?)?;
    let mut f = std::fs::File::create(&schema_path)?;
    write!(f, "{}", sim.schema)?;
    println!(
        "wrote {} rows to {} and schema to {}",
        sim.data.rows(),
        args.out.display(),
        schema_path.display()
    );
    Ok(())
}
