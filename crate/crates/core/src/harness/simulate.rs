use rand::Rng;
use rand_distr::StandardNormal;

use super::rng;
use crate::dataset::{Column, Dataset, Schema};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Generated data together with the schema that declares its roles.
#[derive(Debug, Clone)]
pub struct Simulated {
    pub data: Dataset,
    pub schema: Schema,
}

/// The 1000-applicant loan example: binary default, education level and a
/// two-level group, with fixed cell counts.
pub fn gen_simple_example() -> Simulated {
    // (edu, group, defaults, repaid)
    const CELLS: [(&str, &str, usize, usize); 4] = [
        ("low", "minus", 225, 225),
        ("low", "plus", 60, 90),
        ("high", "minus", 20, 80),
        ("high", "plus", 30, 270),
    ];
    let mut y = Vec::with_capacity(1000);
    let mut edu = Vec::with_capacity(1000);
    let mut group = Vec::with_capacity(1000);
    for (e, g, yes, no) in CELLS {
        for k in 0..yes + no {
            y.push(if k < yes { 1.0 } else { 0.0 });
            edu.push(e);
            group.push(g);
        }
    }
    let data = Dataset::new(
        vec!["default".into(), "edu".into(), "group".into()],
        vec![
            Column::Numeric(y),
            Column::categorical_from_labels(&edu),
            Column::categorical_from_labels(&group),
        ],
    )
    .expect("fixed shape");
    let schema = Schema::parse(
        "default = response\nedu = legitimate, categorical\ngroup = sensitive, categorical\n",
    )
    .expect("static schema");
    Simulated { data, schema }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fairness {
    /// No direct s → y or w → y effect.
    Fair,
    Unrestricted,
}

/// Linear Gaussian structural model over binary sensitive columns.
///
/// `x = s·A_x + e`, `x_u = s·A_u + e`, `w = s·A_w + x_u·B_w + e`,
/// `y = x·b_x + x_u·b_u + s·b_s + w·b_w + e`. The unobserved `x_u` feed
/// `w` and `y` but are not emitted.
#[derive(Debug, Clone)]
pub struct DagSpec {
    pub n: usize,
    pub p_s: usize,
    pub p_x: usize,
    pub p_xu: usize,
    pub p_w: usize,
    /// `p_s x p_x`
    pub s_to_x: Matrix,
    /// `p_s x p_xu`
    pub s_to_xu: Matrix,
    /// `p_s x p_w`
    pub s_to_w: Matrix,
    /// `p_xu x p_w`
    pub xu_to_w: Matrix,
    pub x_to_y: Vec<f64>,
    pub xu_to_y: Vec<f64>,
    pub s_to_y: Vec<f64>,
    pub w_to_y: Vec<f64>,
    pub noise_x: f64,
    pub noise_w: f64,
    pub noise_y: f64,
    pub fairness: Fairness,
    pub seed: u64,
}

impl DagSpec {
    /// A ready-made model: every edge from s has weight .8 into x and .6
    /// into w, x has unit effect on y and, when unrestricted, s and w have
    /// direct effects .5 and .3. No unobserved covariates.
    pub fn standard(
        n: usize,
        p_s: usize,
        p_x: usize,
        p_w: usize,
        fairness: Fairness,
        seed: u64,
    ) -> DagSpec {
        let fill = |r: usize, c: usize, v: f64| {
            Matrix::from_col_major(r, c, vec![v; r * c]).expect("sized")
        };
        let (s_y, w_y) = match fairness {
            Fairness::Fair => (0.0, 0.0),
            Fairness::Unrestricted => (0.5, 0.3),
        };
        DagSpec {
            n,
            p_s,
            p_x,
            p_xu: 0,
            p_w,
            s_to_x: fill(p_s, p_x, 0.8),
            s_to_xu: Matrix::zeros(p_s, 0),
            s_to_w: fill(p_s, p_w, 0.6),
            xu_to_w: Matrix::zeros(0, p_w),
            x_to_y: vec![1.0; p_x],
            xu_to_y: Vec::new(),
            s_to_y: vec![s_y; p_s],
            w_to_y: vec![w_y; p_w],
            noise_x: 1.0,
            noise_w: 1.0,
            noise_y: 1.0,
            fairness,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let shape = |name: &str, m: &Matrix, r: usize, c: usize| {
            if (m.rows(), m.cols()) != (r, c) {
                Err(Error::Config(format!(
                    "{name} must be {r}x{c}, got {}x{}",
                    m.rows(),
                    m.cols()
                )))
            } else {
                Ok(())
            }
        };
        let len = |name: &str, v: &[f64], n: usize| {
            if v.len() != n {
                Err(Error::Config(format!("{name} needs {n} entries, got {}", v.len())))
            } else {
                Ok(())
            }
        };
        if self.n < 2 {
            return Err(Error::Config("a DAG sample needs at least 2 rows".into()));
        }
        if self.p_s == 0 {
            return Err(Error::Config("a DAG needs at least one sensitive column".into()));
        }
        shape("s_to_x", &self.s_to_x, self.p_s, self.p_x)?;
        shape("s_to_xu", &self.s_to_xu, self.p_s, self.p_xu)?;
        shape("s_to_w", &self.s_to_w, self.p_s, self.p_w)?;
        shape("xu_to_w", &self.xu_to_w, self.p_xu, self.p_w)?;
        len("x_to_y", &self.x_to_y, self.p_x)?;
        len("xu_to_y", &self.xu_to_y, self.p_xu)?;
        len("s_to_y", &self.s_to_y, self.p_s)?;
        len("w_to_y", &self.w_to_y, self.p_w)?;
        for (name, v) in [
            ("noise_x", self.noise_x),
            ("noise_w", self.noise_w),
            ("noise_y", self.noise_y),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.fairness == Fairness::Fair
            && self.s_to_y.iter().chain(&self.w_to_y).any(|&c| c != 0.0)
        {
            return Err(Error::Config(
                "fair DAGs cannot have direct s -> y or w -> y effects".into(),
            ));
        }
        Ok(())
    }
}

pub fn gen_dag(spec: &DagSpec) -> Result<Simulated> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = rng(spec.seed);
    let s: Vec<Vec<f64>> = (0..spec.p_s)
        .map(|_| {
            (0..n)
                .map(|_| if rng.gen_bool(0.5) { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    let mut normal = |sd: f64| -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        z * sd
    };

    let linear = |parents: &[Vec<f64>], coef: &Matrix, j: usize, i: usize| -> f64 {
        parents
            .iter()
            .enumerate()
            .map(|(k, p)| p[i] * coef.get(k, j))
            .sum()
    };

    let mut x = vec![vec![0.0; n]; spec.p_x];
    let mut xu = vec![vec![0.0; n]; spec.p_xu];
    let mut w = vec![vec![0.0; n]; spec.p_w];
    let mut y = vec![0.0; n];
    for i in 0..n {
        for (j, col) in x.iter_mut().enumerate() {
            col[i] = linear(&s, &spec.s_to_x, j, i) + normal(spec.noise_x);
        }
        for (j, col) in xu.iter_mut().enumerate() {
            col[i] = linear(&s, &spec.s_to_xu, j, i) + normal(spec.noise_x);
        }
        for (j, col) in w.iter_mut().enumerate() {
            col[i] = linear(&s, &spec.s_to_w, j, i)
                + linear(&xu, &spec.xu_to_w, j, i)
                + normal(spec.noise_w);
        }
        let mut v = normal(spec.noise_y);
        for (cols, coef) in [
            (&x, &spec.x_to_y),
            (&xu, &spec.xu_to_y),
            (&s, &spec.s_to_y),
            (&w, &spec.w_to_y),
        ] {
            v += cols.iter().zip(coef).map(|(c, b)| c[i] * b).sum::<f64>();
        }
        y[i] = v;
    }

    let mut names = vec!["y".to_string()];
    let mut columns = vec![Column::Numeric(y)];
    let mut schema = String::from("y = response\n");
    for (prefix, role, cols) in [("s", "sensitive", s), ("x", "legitimate", x), ("w", "suspect", w)]
    {
        for (k, c) in cols.into_iter().enumerate() {
            let name = format!("{prefix}{}", k + 1);
            schema.push_str(&format!("{name} = {role}\n"));
            names.push(name);
            columns.push(Column::Numeric(c));
        }
    }
    Ok(Simulated {
        data: Dataset::new(names, columns)?,
        schema: Schema::parse(&schema)?,
    })
}

/// Red/white wine stand-in with the public data set's shape: eleven
/// physico-chemical columns with type-specific means and spreads, and a
/// continuous quality score whose white-minus-red gap is fixed.
#[derive(Debug, Clone)]
pub struct WineLikeSpec {
    pub n_red: usize,
    pub n_white: usize,
    /// Exact white-minus-red mean quality difference.
    pub quality_gap: f64,
    pub noise: f64,
    pub seed: u64,
}

impl Default for WineLikeSpec {
    fn default() -> Self {
        WineLikeSpec {
            n_red: 1599,
            n_white: 4898,
            quality_gap: 0.24,
            noise: 0.7,
            seed: 2017,
        }
    }
}

// name, red (mean, sd), white (mean, sd), loading on a shared factor,
// effect on quality per pooled standard deviation
const WINE_FEATURES: [(&str, (f64, f64), (f64, f64), f64, f64); 11] = [
    ("fixed_acidity", (8.32, 1.74), (6.85, 0.84), 0.3, 0.02),
    ("volatile_acidity", (0.528, 0.179), (0.278, 0.10), 0.0, -0.20),
    ("citric_acid", (0.271, 0.195), (0.334, 0.121), 0.2, 0.03),
    ("residual_sugar", (2.54, 1.41), (6.39, 5.07), 0.5, 0.05),
    ("chlorides", (0.087, 0.047), (0.0458, 0.0218), 0.3, -0.08),
    ("free_sulfur_dioxide", (15.9, 10.5), (35.3, 17.0), 0.2, 0.05),
    ("total_sulfur_dioxide", (46.5, 32.9), (138.4, 42.5), 0.3, -0.05),
    ("density", (0.9967, 0.0019), (0.9940, 0.0030), 0.8, -0.05),
    ("pH", (3.31, 0.154), (3.19, 0.151), -0.2, 0.02),
    ("sulphates", (0.658, 0.170), (0.490, 0.114), 0.0, 0.10),
    ("alcohol", (10.42, 1.07), (10.51, 1.23), -0.7, 0.38),
];
const RED_QUALITY_MEAN: f64 = 5.636;

pub fn gen_wine_like(spec: &WineLikeSpec) -> Result<Simulated> {
    if spec.n_red < 2 || spec.n_white < 2 {
        return Err(Error::Config("need at least two wines of each type".into()));
    }
    let n = spec.n_red + spec.n_white;
    let wr = spec.n_red as f64 / n as f64;
    let ww = 1.0 - wr;
    let mut rng = rng(spec.seed);
    let mut z = || -> f64 { rng.sample(StandardNormal) };

    let is_white: Vec<bool> = (0..n).map(|i| i >= spec.n_red).collect();
    let mut features = vec![vec![0.0; n]; WINE_FEATURES.len()];
    let mut quality = vec![0.0; n];
    for i in 0..n {
        let common = z();
        let mut q = 0.0;
        for (j, &(_, red, white, load, effect)) in WINE_FEATURES.iter().enumerate() {
            let (mu, sd) = if is_white[i] { white } else { red };
            let e = load * common + (1.0 - load * load).sqrt() * z();
            let v = mu + sd * e;
            features[j][i] = v;
            let pooled_mu = wr * red.0 + ww * white.0;
            let pooled_sd = (wr * red.1 * red.1
                + ww * white.1 * white.1
                + wr * ww * (red.0 - white.0).powi(2))
            .sqrt();
            q += effect * (v - pooled_mu) / pooled_sd;
        }
        quality[i] = q + spec.noise * z();
    }

    // pin the group means: red at its reference mean, white at the gap above
    let group_mean = |white: bool| {
        let v: Vec<f64> = (0..n)
            .filter(|&i| is_white[i] == white)
            .map(|i| quality[i])
            .collect();
        crate::linalg::mean(&v)
    };
    let shift_red = RED_QUALITY_MEAN - group_mean(false);
    let shift_white = RED_QUALITY_MEAN + spec.quality_gap - group_mean(true);
    for (q, &w) in quality.iter_mut().zip(&is_white) {
        *q += if w { shift_white } else { shift_red };
    }

    let mut names = vec!["quality".to_string(), "type".to_string()];
    let types: Vec<&str> = is_white
        .iter()
        .map(|&w| if w { "white" } else { "red" })
        .collect();
    let mut columns = vec![
        Column::Numeric(quality),
        Column::categorical_from_labels(&types),
    ];
    let mut schema = String::from("quality = response\ntype = sensitive, categorical\n");
    for (&(name, ..), col) in WINE_FEATURES.iter().zip(features) {
        names.push(name.to_string());
        columns.push(Column::Numeric(col));
        schema.push_str(&format!("{name} = legitimate\n"));
    }
    Ok(Simulated {
        data: Dataset::new(names, columns)?,
        schema: Schema::parse(&schema)?,
    })
}
