use rayon::prelude::*;

use super::AnalysisError;
use crate::bpe::{BpeModel, CachedEncoder};
use crate::corpus::Corpus;

/// Subwords needed to encode every sentence of `dataset`.
pub fn subword_count(model: &BpeModel, dataset: &Corpus) -> Result<u64, AnalysisError> {
    if dataset.is_empty() {
        return Err(AnalysisError::EmptyDataset(dataset.domain.clone()));
    }
    let mut enc = CachedEncoder::new(model);
    Ok(dataset.iter().map(|s| enc.count(s) as u64).sum())
}

/// `|model(dataset)| / |reference(dataset)|`.
pub fn efficiency_ratio(
    model: &BpeModel,
    dataset: &Corpus,
    reference: &BpeModel,
) -> Result<f64, AnalysisError> {
    if model.target_size() != reference.target_size() {
        return Err(AnalysisError::SizeMismatch {
            left: model.target_size(),
            right: reference.target_size(),
        });
    }
    let num = subword_count(model, dataset)?;
    let den = subword_count(reference, dataset)?;
    Ok(num as f64 / den as f64)
}

/// Rows are models, columns are datasets; each column's reference is the
/// model carrying the dataset's label.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyMatrix {
    pub rows: Vec<String>,
    pub columns: Vec<String>,
    pub cells: Vec<Vec<f64>>,
    /// `starred[r][c]`: the cell equals its column minimum.
    pub starred: Vec<Vec<bool>>,
}

pub fn efficiency_matrix(
    models: &[(String, &BpeModel)],
    datasets: &[(String, &Corpus)],
) -> Result<EfficiencyMatrix, AnalysisError> {
    let mut refs = Vec::with_capacity(datasets.len());
    for (label, data) in datasets {
        let (_, model) = models
            .iter()
            .find(|(m, _)| m == label)
            .ok_or_else(|| AnalysisError::MissingReference(label.clone()))?;
        if data.is_empty() {
            return Err(AnalysisError::EmptyDataset(label.clone()));
        }
        refs.push(*model);
    }
    for (_, m) in models {
        if m.target_size() != refs[0].target_size() {
            return Err(AnalysisError::SizeMismatch {
                left: m.target_size(),
                right: refs[0].target_size(),
            });
        }
    }
    let counts: Vec<Vec<u64>> = models
        .par_iter()
        .map(|(_, m)| {
            datasets
                .iter()
                .map(|(_, d)| subword_count(m, d))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    let ref_counts: Vec<u64> = (0..datasets.len())
        .map(|c| {
            let r = models
                .iter()
                .position(|(m, _)| *m == datasets[c].0)
                .expect("checked above");
            counts[r][c]
        })
        .collect();
    let cells: Vec<Vec<f64>> = counts
        .iter()
        .map(|row| {
            row.iter()
                .zip(&ref_counts)
                .map(|(&n, &d)| n as f64 / d as f64)
                .collect()
        })
        .collect();
    let minima: Vec<f64> = (0..datasets.len())
        .map(|c| cells.iter().map(|r| r[c]).fold(f64::INFINITY, f64::min))
        .collect();
    let starred = cells
        .iter()
        .map(|r| r.iter().zip(&minima).map(|(v, m)| v == m).collect())
        .collect();
    Ok(EfficiencyMatrix {
        rows: models.iter().map(|(l, _)| l.clone()).collect(),
        columns: datasets.iter().map(|(l, _)| l.clone()).collect(),
        cells,
        starred,
    })
}

impl EfficiencyMatrix {
    pub fn get(&self, row: &str, column: &str) -> Option<f64> {
        let r = self.rows.iter().position(|x| x == row)?;
        let c = self.columns.iter().position(|x| x == column)?;
        Some(self.cells[r][c])
    }

    /// Tidy rows `model,dataset,ratio,column_min`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("model,dataset,ratio,column_min\n");
        for (r, row) in self.rows.iter().enumerate() {
            for (c, col) in self.columns.iter().enumerate() {
                out.push_str(&format!(
                    "{row},{col},{:.6},{}\n",
                    self.cells[r][c], self.starred[r][c]
                ));
            }
        }
        out
    }

    /// Aligned table with two decimals; `*` marks column minima.
    pub fn to_table(&self) -> String {
        let label_w = self.rows.iter().map(|r| r.chars().count()).max().unwrap_or(0).max(5);
        let col_w = self.columns.iter().map(|c| c.chars().count()).max().unwrap_or(0).max(5);
        let mut out = format!("{:<label_w$}", "");
        for c in &self.columns {
            out.push_str(&format!("  {c:>col_w$}"));
        }
        out.push('\n');
        for (r, row) in self.rows.iter().enumerate() {
            out.push_str(&format!("{row:<label_w$}"));
            for c in 0..self.columns.len() {
                let mark = if self.starred[r][c] { "*" } else { " " };
                let v = format!("{:.2}{mark}", self.cells[r][c]);
                out.push_str(&format!("  {v:>col_w$}"));
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bpe::train_bpe;

    fn toy() -> BpeModel {
        train_bpe(["ab ab ac"], 4).unwrap()
    }

    #[test]
    fn counts_on_toy_model() {
        let m = toy();
        assert_eq!(subword_count(&m, &Corpus::new(["ab"], "x")).unwrap(), 1);
        // word-end variants: `b` inside a word is not in the vocabulary
        assert_eq!(subword_count(&m, &Corpus::new(["abc"], "x")).unwrap(), 3);
        let twice = Corpus::new(["ab ac", "ab ac"], "x");
        assert_eq!(subword_count(&m, &twice).unwrap(), 2 * subword_count(&m, &Corpus::new(["ab ac"], "x")).unwrap());
        assert!(matches!(
            subword_count(&m, &Corpus::new(Vec::<String>::new(), "x")),
            Err(AnalysisError::EmptyDataset(_))
        ));
    }

    #[test]
    fn self_ratio_is_one() {
        let m = toy();
        let d = Corpus::new(["ab ac ab"], "x");
        assert_eq!(efficiency_ratio(&m, &d, &m).unwrap(), 1.0);
    }

    #[test]
    fn size_mismatch_is_rejected() {
        let a = toy();
        let b = train_bpe(["ab ab ac"], 5).unwrap();
        assert!(matches!(
            efficiency_ratio(&a, &Corpus::new(["ab"], "x"), &b),
            Err(AnalysisError::SizeMismatch { .. })
        ));
    }

    #[test]
    fn single_cell_matrix() {
        let m = toy();
        let d = Corpus::new(["ab ac"], "D");
        let mx = efficiency_matrix(&[("D".into(), &m)], &[("D".into(), &d)]).unwrap();
        assert_eq!(mx.cells, [[1.0]]);
        assert_eq!(mx.starred, [[true]]);
        assert!(mx.to_table().contains("1.00*"));
        assert_eq!(mx.to_csv(), "model,dataset,ratio,column_min\nD,D,1.000000,true\n");
    }

    #[test]
    fn missing_reference() {
        let m = toy();
        let d = Corpus::new(["ab"], "D");
        assert!(matches!(
            efficiency_matrix(&[("E".into(), &m)], &[("D".into(), &d)]),
            Err(AnalysisError::MissingReference(_))
        ));
    }

    #[test]
    fn two_domains() {
        let a_text = ["xyz xyz xyz qq", "xyz xyz qq"];
        let b_text = ["pqr pqr pqr zz", "pqr pqr zz"];
        let ma = train_bpe(a_text, 12).unwrap();
        let mb = train_bpe(b_text, 12).unwrap();
        let da = Corpus::new(a_text, "A");
        let db = Corpus::new(b_text, "B");
        let mx = efficiency_matrix(
            &[("A".into(), &ma), ("B".into(), &mb)],
            &[("A".into(), &da), ("B".into(), &db)],
        )
        .unwrap();
        assert_eq!(mx.get("A", "A"), Some(1.0));
        assert_eq!(mx.get("B", "B"), Some(1.0));
        assert!(mx.get("A", "B").unwrap() > 1.0);
        assert!(mx.starred[0][0] && mx.starred[1][1]);
    }
}
