//! Construction properties of the estimators, decompositions and scores on
//! random correlated designs.

mod common;

use common::{max_abs, random_data, random_design, rel_err};
use impartial::dataset::{encode_raw, Column, EncodedDesign};
use impartial::decomposition::{decompose, decompose_coefficients, DecompositionMode};
use impartial::estimators::{
    correct_blackbox, fit_total, predict, residualize_suspect, EstimatorVariant,
};
use impartial::linalg::{mean, project, solve_least_squares, Matrix};
use impartial::metrics::{
    discrimination_score, impartiality_breakdown, impartiality_score, rmse, rsse,
    ImpartialityMode,
};
use proptest::prelude::*;

fn blocks() -> impl Strategy<Value = (u64, usize, usize, usize)> {
    (any::<u64>(), 1usize..=3, 0usize..=4, 0usize..=3)
}

fn applicable(d: &EncodedDesign) -> Vec<EstimatorVariant> {
    let mut v = vec![
        EstimatorVariant::Full,
        EstimatorVariant::ExcludeS,
        EstimatorVariant::Marginal,
        EstimatorVariant::Total,
    ];
    if d.suspect_matrix().is_empty() {
        v.push(EstimatorVariant::Feo);
    }
    if d.x.is_empty() {
        v.push(EstimatorVariant::Fseo);
    }
    v
}

/// A nonlinear stand-in for an external model's predictions.
fn black_box(d: &EncodedDesign) -> Matrix {
    let v: Vec<f64> = (0..d.rows())
        .map(|i| {
            let s = d.s.get(i, 0);
            let y = d.y[i];
            (y * 0.8).tanh() + 0.5 * s * s + 0.1 * y * y
        })
        .collect();
    Matrix::column_vector(v)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn joint_fit_matches_one_shot_solve((seed, ps, px, pw) in blocks()) {
        let d = random_design(seed, 200, ps, px, pw);
        let fit = fit_total(&d).unwrap();
        let full = predict(&fit, &d, EstimatorVariant::Full).unwrap().values;
        let ones = vec![1.0; d.rows()];
        let m = Matrix::hcat(&[&Matrix::column_vector(ones), &d.full_matrix()]).unwrap();
        let oracle = solve_least_squares(&m, &d.y).unwrap();
        prop_assert!(rel_err(&full, &oracle.fitted) < 1e-10);
        prop_assert!((fit.beta0 - mean(&d.y)).abs() < 1e-12);
    }

    #[test]
    fn every_variant_preserves_the_mean((seed, ps, px, pw) in blocks()) {
        let d = random_design(seed, 200, ps, px, pw);
        let fit = fit_total(&d).unwrap();
        let my = mean(&d.y);
        for v in applicable(&d) {
            let p = predict(&fit, &d, v).unwrap().values;
            prop_assert!((mean(&p) - my).abs() < 1e-10, "{v}");
        }
    }

    #[test]
    fn marginal_equals_direct_plus_indirect((seed, ps, px) in (any::<u64>(), 1usize..=3, 1usize..=4)) {
        let d = random_design(seed, 200, ps, px, 0);
        let fit = fit_total(&d).unwrap();
        let c = decompose_coefficients(&fit, &d).unwrap();
        let sum: Vec<f64> = c.direct.iter().zip(&c.indirect).map(|(a, b)| a + b).collect();
        prop_assert!(rel_err(&sum, &c.marginal) < 1e-8);
        // marginal is also an independent refit of y on X alone
        let refit = solve_least_squares(&d.x, &d.y).unwrap();
        prop_assert!(rel_err(&c.marginal, &refit.coefficients) < 1e-8);
    }

    #[test]
    fn components_sum_to_full_fit((seed, ps, px, pw) in blocks()) {
        let d = random_design(seed, 200, ps, px, pw);
        let fit = fit_total(&d).unwrap();
        let full = predict(&fit, &d, EstimatorVariant::Full).unwrap().values;
        let mut modes = vec![DecompositionMode::Total];
        if pw == 0 { modes.push(DecompositionMode::Feo); }
        if px == 0 { modes.push(DecompositionMode::Fseo); }
        for mode in modes {
            let r = decompose(&fit, &d, mode).unwrap();
            prop_assert!(rel_err(&r.total(), &full) < 1e-8, "{mode}");
        }
    }

    #[test]
    fn feo_components_live_in_the_right_spaces((seed, ps, px) in (any::<u64>(), 1usize..=3, 1usize..=4)) {
        let d = random_design(seed, 200, ps, px, 0);
        let fit = fit_total(&d).unwrap();
        let r = decompose(&fit, &d, DecompositionMode::Feo).unwrap();
        let di = Matrix::column_vector(r.di.clone());
        let dt = Matrix::column_vector(r.dt.clone());
        let on_x = project(&d.x, &di).unwrap();
        prop_assert!(rel_err(on_x.projected.col(0), &r.di) < 1e-8);
        let cross = d.x.tr_mul(&dt);
        prop_assert!(cross.max_abs() < 1e-8 * (1.0 + max_abs(&r.dt)) * d.rows() as f64);
    }

    #[test]
    fn constructed_estimates_score_zero((seed, ps, px, pw) in blocks()) {
        let d = random_design(seed, 200, ps, px, pw);
        let fit = fit_total(&d).unwrap();
        let total = predict(&fit, &d, EstimatorVariant::Total).unwrap().values;
        prop_assert!(impartiality_score(&total, &d, &d.y, ImpartialityMode::Seo).unwrap() < 1e-8);

        let feo_design = d.all_as_legitimate();
        let f = fit_total(&feo_design).unwrap();
        let feo = predict(&f, &feo_design, EstimatorVariant::Feo).unwrap().values;
        prop_assert!(impartiality_score(&feo, &feo_design, &d.y, ImpartialityMode::Feo).unwrap() < 1e-8);

        let seo_design = d.all_as_suspect();
        let f = fit_total(&seo_design).unwrap();
        let fseo = predict(&f, &seo_design, EstimatorVariant::Fseo).unwrap().values;
        prop_assert!(impartiality_score(&fseo, &seo_design, &d.y, ImpartialityMode::Seo).unwrap() < 1e-8);

        let ext = black_box(&d);
        let (_, corrected) = correct_blackbox(&d, &ext).unwrap();
        let with_b = d.with_blackbox(&ext, vec!["bb".into()], None).unwrap();
        let is = impartiality_score(&corrected.values, &with_b, &d.y, ImpartialityMode::Seo).unwrap();
        prop_assert!(is < 1e-8, "{is}");
    }

    #[test]
    fn fseo_equalizes_group_means((seed, pw) in (any::<u64>(), 1usize..=3)) {
        let d = random_design(seed, 200, 1, 0, pw);
        let fit = fit_total(&d).unwrap();
        let p = predict(&fit, &d, EstimatorVariant::Fseo).unwrap().values;
        let ds = discrimination_score(&p, &d.group_labels, "1", "0").unwrap();
        prop_assert!(ds.abs() < 1e-10, "{ds}");
    }

    #[test]
    fn feo_ignores_sensitive_values((seed, px, flips) in (any::<u64>(), 1usize..=4, prop::collection::vec(0usize..200, 1..20))) {
        let (data, schema) = random_data(seed, 200, 1, px, 0);
        let d = impartial::dataset::encode(&data, &schema).unwrap();
        let fit = fit_total(&d).unwrap();
        let base = predict(&fit, &d, EstimatorVariant::Feo).unwrap().values;

        let mut s = data.numeric("s0").unwrap().to_vec();
        for &i in &flips {
            s[i] = 1.0 - s[i];
        }
        let flipped = data.with_column("s0", Column::Numeric(s)).unwrap();
        let fd = encode_raw(&flipped, &schema).unwrap().centered_with(&d.means).unwrap();
        let again = predict(&fit, &fd, EstimatorVariant::Feo).unwrap().values;
        prop_assert_eq!(base, again);
    }

    #[test]
    fn residualizing_keeps_suspect_coefficients((seed, ps, px, pw) in (any::<u64>(), 1usize..=3, 0usize..=4, 1usize..=3)) {
        let d = random_design(seed, 200, ps, px, pw);
        let fit = fit_total(&d).unwrap();
        let r = residualize_suspect(&d).unwrap();
        let refit = fit_total(&r).unwrap();
        prop_assert!(rel_err(&refit.beta_x[px..], &fit.beta_w) < 1e-8);
        let total = predict(&fit, &d, EstimatorVariant::Total).unwrap().values;
        let feo = predict(&refit, &r, EstimatorVariant::Feo).unwrap().values;
        prop_assert!(rel_err(&feo, &total) < 1e-8);
    }

    #[test]
    fn score_algebra((seed, shift) in (any::<u64>(), -3.0f64..3.0)) {
        let d = random_design(seed, 200, 1, 2, 1);
        let fit = fit_total(&d).unwrap();
        let a = predict(&fit, &d, EstimatorVariant::Full).unwrap().values;
        let b = predict(&fit, &d, EstimatorVariant::ExcludeS).unwrap().values;
        let g = &d.group_labels;
        let ds = |v: &[f64]| discrimination_score(v, g, "1", "0").unwrap();
        let shifted: Vec<f64> = a.iter().map(|v| v + shift).collect();
        prop_assert!((ds(&shifted) - ds(&a)).abs() < 1e-12);
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        prop_assert!((ds(&sum) - ds(&a) - ds(&b)).abs() < 1e-12);

        let r = rsse(&a, &d.y).unwrap();
        let m = rmse(&a, &d.y).unwrap();
        prop_assert!((r * r - d.rows() as f64 * m * m).abs() < 1e-9 * r * r);
        for mode in [ImpartialityMode::Feo, ImpartialityMode::Seo] {
            prop_assert!(impartiality_score(&a, &d, &d.y, mode).unwrap() >= 0.0);
            prop_assert!(impartiality_score(&b, &d, &d.y, mode).unwrap() >= 0.0);
        }
    }
}

#[test]
fn breakdown_terms_vanish_for_total_estimates() {
    let d = random_design(11, 500, 2, 3, 2);
    let fit = fit_total(&d).unwrap();
    let p = predict(&fit, &d, EstimatorVariant::Total).unwrap().values;
    let b = impartiality_breakdown(&p, &d, &d.y, ImpartialityMode::Seo).unwrap();
    assert!(b.mean_term < 1e-10);
    assert!(b.legitimate.iter().chain(&b.suspect).chain(&b.sensitive).all(|v| *v < 1e-10));
    assert_eq!(b.legitimate.len(), 3);
    assert_eq!(b.suspect.len(), 2);
    assert_eq!(b.sensitive.len(), 2);
}
