use std::fmt;
use std::path::Path;

use crate::augment::{amplitude_eliminate, amplitude_only, DEFAULT_CONST_AMPLITUDE};
use crate::corpus::{MultiDomainCorpus, Split};
use crate::coteacher::{evaluate, fit, Ablation, FactConfig};
use crate::error::{config, FactError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Original,
    /// Constant amplitude, original phase.
    PhaseOnly,
    /// Original amplitude, zero phase.
    AmplitudeOnly,
}

impl Representation {
    pub const ALL: [Representation; 3] = [Self::Original, Self::PhaseOnly, Self::AmplitudeOnly];

    pub fn transform(self, corpus: &MultiDomainCorpus) -> Result<MultiDomainCorpus> {
        match self {
            Self::Original => Ok(corpus.clone()),
            Self::PhaseOnly => corpus.map_images(|x| amplitude_eliminate(x, DEFAULT_CONST_AMPLITUDE)),
            Self::AmplitudeOnly => corpus.map_images(|x| amplitude_only(x, 0.0)),
        }
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Original => "original",
            Self::PhaseOnly => "phase_only",
            Self::AmplitudeOnly => "amplitude_only",
        })
    }
}

/// `accuracy[r][s][t]`: representation `r`, trained on the train split of
/// domain `s`, tested on the validation split of domain `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolReport {
    pub domain_names: Vec<String>,
    pub accuracy: Vec<Vec<Vec<f64>>>,
}

impl ProtocolReport {
    pub fn matrix(&self, r: Representation) -> &Vec<Vec<f64>> {
        &self.accuracy[Representation::ALL.iter().position(|&x| x == r).unwrap()]
    }

    /// `matrix(r) - matrix(Original)`.
    pub fn delta(&self, r: Representation) -> Vec<Vec<f64>> {
        let base = self.matrix(Representation::Original);
        self.matrix(r)
            .iter()
            .zip(base)
            .map(|(row, b)| row.iter().zip(b).map(|(x, y)| x - y).collect())
            .collect()
    }

    /// Mean of the off-diagonal entries of a matrix.
    pub fn mean_cross_domain(m: &[Vec<f64>]) -> f64 {
        let n = m.len();
        let mut s = 0.0;
        for (i, row) in m.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if i != j {
                    s += v;
                }
            }
        }
        s / (n * (n - 1)).max(1) as f64
    }

    /// Long-format CSV: representation, train domain, test domain, accuracy,
    /// delta against the original representation.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io = |e: csv::Error| FactError::Io {
            path: path.to_path_buf(),
            source: e.into(),
        };
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        w.write_record(["representation", "train_domain", "test_domain", "accuracy", "delta"])
            .map_err(io)?;
        for r in Representation::ALL {
            let delta = self.delta(r);
            for (s, row) in self.matrix(r).iter().enumerate() {
                for (t, acc) in row.iter().enumerate() {
                    w.write_record([
                        r.to_string(),
                        self.domain_names[s].clone(),
                        self.domain_names[t].clone(),
                        acc.to_string(),
                        delta[s][t].to_string(),
                    ])
                    .map_err(io)?;
                }
            }
        }
        w.flush().map_err(|e| FactError::io(path, e))
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        for r in Representation::ALL {
            out.push_str(&format!("{r} (rows: train, cols: test)\n"));
            for (s, row) in self.matrix(r).iter().enumerate() {
                let cells: Vec<String> = row.iter().map(|v| format!("{v:.3}")).collect();
                out.push_str(&format!("  {:>10}  {}\n", self.domain_names[s], cells.join("  ")));
            }
            out.push_str(&format!(
                "  mean cross-domain {:.3}\n",
                Self::mean_cross_domain(self.matrix(r))
            ));
        }
        out
    }
}

/// Trains an ERM model per (representation, source domain) and evaluates it
/// on every domain under the same representation.
pub fn phase_only_protocol(corpus: &MultiDomainCorpus, cfg: &FactConfig) -> Result<ProtocolReport> {
    let n = corpus.num_domains();
    if n < 2 {
        return Err(config("the representation protocol needs at least two domains"));
    }
    let mut erm = cfg.clone();
    Ablation::Baseline.apply(&mut erm);
    let mut accuracy = Vec::with_capacity(3);
    for r in Representation::ALL {
        let rep = r.transform(corpus)?;
        let targets: Vec<MultiDomainCorpus> = (0..n).map(|t| rep.subset_domains(&[t])).collect::<Result<_>>()?;
        let mut m = Vec::with_capacity(n);
        for s in 0..n {
            let model = fit(&targets[s], &erm)?.student;
            let row = (0..n)
                .map(|t| {
                    evaluate(&model, &targets[t], Some(Split::Val))?
                        .overall()
                        .ok_or_else(|| FactError::Corpus(format!("no evaluation images for domain {t}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            m.push(row);
        }
        accuracy.push(m);
    }
    Ok(ProtocolReport {
        domain_names: corpus.domain_names().to_vec(),
        accuracy,
    })
}
