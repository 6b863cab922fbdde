use super::schema::{ColumnKind, CovariateRole, Schema};
use super::{Column, Dataset};
use crate::error::{Error, Result};
use crate::linalg::{center_with, column_center, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Block {
    Sensitive,
    Legitimate,
    Suspect,
    BlackBox,
}

impl Block {
    pub const ALL: [Block; 4] = [
        Block::Sensitive,
        Block::Legitimate,
        Block::Suspect,
        Block::BlackBox,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Block::Sensitive => "sensitive",
            Block::Legitimate => "legitimate",
            Block::Suspect => "suspect",
            Block::BlackBox => "blackbox",
        }
    }

    fn of_role(role: CovariateRole) -> Option<Block> {
        match role {
            CovariateRole::Sensitive => Some(Block::Sensitive),
            CovariateRole::Legitimate => Some(Block::Legitimate),
            CovariateRole::Suspect => Some(Block::Suspect),
            CovariateRole::BlackBoxEstimate => Some(Block::BlackBox),
            CovariateRole::Response | CovariateRole::Ignore => None,
        }
    }
}

/// Column provenance labels per block.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BlockLabels {
    pub s: Vec<String>,
    pub x: Vec<String>,
    pub w: Vec<String>,
    pub b: Vec<String>,
}

/// Raw-scale column means that have been subtracted from each block.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Centering {
    pub s: Vec<f64>,
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

/// Numeric design: response plus sensitive (S), legitimate (X), suspect (W)
/// and black-box (B) blocks. Any block may have zero columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedDesign {
    pub y: Vec<f64>,
    pub s: Matrix,
    pub x: Matrix,
    pub w: Matrix,
    pub b: Matrix,
    pub labels: BlockLabels,
    pub means: Centering,
    /// Original sensitive category per row, for group metrics.
    pub group_labels: Vec<String>,
}

/// One-hot encode, form interactions and center every block.
pub fn encode(data: &Dataset, schema: &Schema) -> Result<EncodedDesign> {
    Ok(encode_raw(data, schema)?.centered())
}

/// Like [`encode`] but leaves the blocks on their raw scale.
pub fn encode_raw(data: &Dataset, schema: &Schema) -> Result<EncodedDesign> {
    schema.validate()?;
    let n = data.rows();
    let response = schema.response();
    let y = data
        .numeric(&response.name)
        .map_err(|_| Error::Schema(format!("response '{}' must be numeric", response.name)))?
        .to_vec();

    // encoded columns of every source column, keyed by name
    let mut encoded: Vec<(String, CovariateRole, Vec<(String, Vec<f64>)>)> = Vec::new();
    for spec in &schema.columns {
        if matches!(spec.role, CovariateRole::Response | CovariateRole::Ignore) {
            continue;
        }
        let col = data
            .column(&spec.name)
            .ok_or_else(|| Error::Schema(format!("dataset lacks column '{}'", spec.name)))?;
        let cols = match (spec.kind, col) {
            (ColumnKind::Numeric, Column::Numeric(v)) => vec![(spec.name.clone(), v.clone())],
            (ColumnKind::Categorical, Column::Categorical { levels, codes }) => levels
                .iter()
                .enumerate()
                .skip(1)
                .map(|(lvl, name)| {
                    let ind = codes
                        .iter()
                        .map(|&c| if c == lvl { 1.0 } else { 0.0 })
                        .collect();
                    (format!("{}={}", spec.name, name), ind)
                })
                .collect(),
            _ => {
                return Err(Error::Schema(format!(
                    "column '{}' kind does not match the schema",
                    spec.name
                )))
            }
        };
        encoded.push((spec.name.clone(), spec.role, cols));
    }

    let mut blocks: [Vec<(String, Vec<f64>)>; 4] = Default::default();
    for (_, role, cols) in &encoded {
        if let Some(block) = Block::of_role(*role) {
            blocks[block_index(block)].extend(cols.iter().cloned());
        }
    }

    for (a, b) in &schema.interactions {
        let find = |name: &str| encoded.iter().find(|(n, _, _)| n == name);
        let (ea, eb) = match (find(a), find(b)) {
            (Some(ea), Some(eb)) => (ea, eb),
            _ => {
                return Err(Error::Schema(format!(
                    "interaction {a} * {b} references a response or ignored column"
                )))
            }
        };
        let role = CovariateRole::interaction(ea.1, eb.1)?;
        let block = Block::of_role(role).expect("interaction role is a covariate role");
        for (la, va) in &ea.2 {
            for (lb, vb) in &eb.2 {
                let prod = va.iter().zip(vb).map(|(p, q)| p * q).collect();
                blocks[block_index(block)].push((format!("{la}:{lb}"), prod));
            }
        }
    }

    let [s, x, w, b] = blocks.map(|cols| {
        let labels: Vec<String> = cols.iter().map(|(l, _)| l.clone()).collect();
        let values: Vec<Vec<f64>> = cols.into_iter().map(|(_, v)| v).collect();
        (labels, values)
    });
    let mk = |v: &Vec<Vec<f64>>| Matrix::from_columns(n, v);
    let design = EncodedDesign {
        y,
        s: mk(&s.1)?,
        x: mk(&x.1)?,
        w: mk(&w.1)?,
        b: mk(&b.1)?,
        means: Centering {
            s: vec![0.0; s.0.len()],
            x: vec![0.0; x.0.len()],
            w: vec![0.0; w.0.len()],
            b: vec![0.0; b.0.len()],
        },
        labels: BlockLabels {
            s: s.0,
            x: x.0,
            w: w.0,
            b: b.0,
        },
        group_labels: data.group_labels(schema),
    };
    Ok(design)
}

fn block_index(b: Block) -> usize {
    match b {
        Block::Sensitive => 0,
        Block::Legitimate => 1,
        Block::Suspect => 2,
        Block::BlackBox => 3,
    }
}

fn recenter(m: &Matrix, current: &[f64]) -> (Matrix, Vec<f64>) {
    let (c, extra) = column_center(m);
    let means = current.iter().zip(&extra).map(|(a, b)| a + b).collect();
    (c, means)
}

fn shift_to(m: &Matrix, current: &[f64], target: &[f64]) -> Matrix {
    let delta: Vec<f64> = target.iter().zip(current).map(|(t, c)| t - c).collect();
    center_with(m, &delta)
}

impl EncodedDesign {
    pub fn rows(&self) -> usize {
        self.y.len()
    }

    pub fn block(&self, b: Block) -> &Matrix {
        match b {
            Block::Sensitive => &self.s,
            Block::Legitimate => &self.x,
            Block::Suspect => &self.w,
            Block::BlackBox => &self.b,
        }
    }

    pub fn block_labels(&self, b: Block) -> &[String] {
        match b {
            Block::Sensitive => &self.labels.s,
            Block::Legitimate => &self.labels.x,
            Block::Suspect => &self.labels.w,
            Block::BlackBox => &self.labels.b,
        }
    }

    /// Total number of covariate columns across all blocks.
    pub fn covariate_count(&self) -> usize {
        self.s.cols() + self.x.cols() + self.w.cols() + self.b.cols()
    }

    /// `[S | X | W | B]`.
    pub fn full_matrix(&self) -> Matrix {
        Matrix::hcat(&[&self.s, &self.x, &self.w, &self.b]).expect("blocks share row count")
    }

    /// `[W | B]`: the block treated as suspect when fitting.
    pub fn suspect_matrix(&self) -> Matrix {
        Matrix::hcat(&[&self.w, &self.b]).expect("blocks share row count")
    }

    /// Center each block on its own column means; recorded means stay on
    /// the raw scale.
    pub fn centered(&self) -> EncodedDesign {
        let (s, ms) = recenter(&self.s, &self.means.s);
        let (x, mx) = recenter(&self.x, &self.means.x);
        let (w, mw) = recenter(&self.w, &self.means.w);
        let (b, mb) = recenter(&self.b, &self.means.b);
        EncodedDesign {
            y: self.y.clone(),
            s,
            x,
            w,
            b,
            labels: self.labels.clone(),
            means: Centering {
                s: ms,
                x: mx,
                w: mw,
                b: mb,
            },
            group_labels: self.group_labels.clone(),
        }
    }

    /// Center with externally supplied raw-scale means (training means at
    /// prediction time).
    pub fn centered_with(&self, means: &Centering) -> Result<EncodedDesign> {
        let check = |ctx: &str, a: usize, b: usize| {
            if a == b {
                Ok(())
            } else {
                Err(Error::dim(format!("centering means for {ctx} block"), a, b))
            }
        };
        check("sensitive", self.s.cols(), means.s.len())?;
        check("legitimate", self.x.cols(), means.x.len())?;
        check("suspect", self.w.cols(), means.w.len())?;
        check("blackbox", self.b.cols(), means.b.len())?;
        Ok(EncodedDesign {
            y: self.y.clone(),
            s: shift_to(&self.s, &self.means.s, &means.s),
            x: shift_to(&self.x, &self.means.x, &means.x),
            w: shift_to(&self.w, &self.means.w, &means.w),
            b: shift_to(&self.b, &self.means.b, &means.b),
            labels: self.labels.clone(),
            means: means.clone(),
            group_labels: self.group_labels.clone(),
        })
    }

    pub fn select_rows(&self, idx: &[usize]) -> EncodedDesign {
        EncodedDesign {
            y: idx.iter().map(|&i| self.y[i]).collect(),
            s: self.s.select_rows(idx),
            x: self.x.select_rows(idx),
            w: self.w.select_rows(idx),
            b: self.b.select_rows(idx),
            labels: self.labels.clone(),
            means: self.means.clone(),
            group_labels: idx.iter().map(|&i| self.group_labels[i].clone()).collect(),
        }
    }

    pub fn with_response(&self, y: Vec<f64>) -> Result<EncodedDesign> {
        if y.len() != self.rows() {
            return Err(Error::dim("replacement response", self.rows(), y.len()));
        }
        let mut d = self.clone();
        d.y = y;
        Ok(d)
    }

    /// Every non-sensitive, non-black-box covariate moved into X.
    pub fn all_as_legitimate(&self) -> EncodedDesign {
        let mut d = self.clone();
        d.x = Matrix::hcat(&[&self.x, &self.w]).expect("rows");
        d.w = Matrix::empty(self.rows());
        d.labels.x = [self.labels.x.clone(), self.labels.w.clone()].concat();
        d.labels.w.clear();
        d.means.x = [self.means.x.clone(), self.means.w.clone()].concat();
        d.means.w.clear();
        d
    }

    /// Every non-sensitive, non-black-box covariate moved into W.
    pub fn all_as_suspect(&self) -> EncodedDesign {
        let mut d = self.clone();
        d.w = Matrix::hcat(&[&self.x, &self.w]).expect("rows");
        d.x = Matrix::empty(self.rows());
        d.labels.w = [self.labels.x.clone(), self.labels.w.clone()].concat();
        d.labels.x.clear();
        d.means.w = [self.means.x.clone(), self.means.w.clone()].concat();
        d.means.x.clear();
        d
    }

    /// Append columns to the black-box block. With `means = None` the new
    /// columns are centered on their own means, otherwise on the given ones.
    pub fn with_blackbox(
        &self,
        values: &Matrix,
        labels: Vec<String>,
        means: Option<&[f64]>,
    ) -> Result<EncodedDesign> {
        if values.rows() != self.rows() {
            return Err(Error::dim("black-box predictions", self.rows(), values.rows()));
        }
        if labels.len() != values.cols() {
            return Err(Error::dim("black-box labels", values.cols(), labels.len()));
        }
        if !values.all_finite() {
            return Err(Error::NonFinite("black-box predictions".into()));
        }
        let (centered, mu) = match means {
            None => column_center(values),
            Some(m) => {
                if m.len() != values.cols() {
                    return Err(Error::dim("black-box means", values.cols(), m.len()));
                }
                (center_with(values, m), m.to_vec())
            }
        };
        let mut d = self.clone();
        d.b = Matrix::hcat(&[&self.b, &centered])?;
        d.labels.b.extend(labels);
        d.means.b.extend(mu);
        Ok(d)
    }

    pub fn without_blackbox(&self) -> EncodedDesign {
        let mut d = self.clone();
        d.b = Matrix::empty(self.rows());
        d.labels.b.clear();
        d.means.b.clear();
        d
    }
}
