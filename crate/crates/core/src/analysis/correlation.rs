use statrs::distribution::{ContinuousCDF, StudentsT};

use super::AnalysisError;

/// Largest input for [`permutation_p_value`] (10! permutations).
pub const MAX_PERMUTATION_N: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub n: usize,
    pub pearson: f64,
    /// Two-sided, t approximation with `n − 2` degrees of freedom.
    pub pearson_p: f64,
    pub spearman: f64,
    pub spearman_p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Pearson,
    Spearman,
}

fn check(x: &[f64], y: &[f64]) -> Result<(), AnalysisError> {
    if x.len() != y.len() {
        return Err(AnalysisError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(AnalysisError::TooShort(x.len()));
    }
    Ok(())
}

fn raw_pearson(x: &[f64], y: &[f64]) -> Result<f64, AnalysisError> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(AnalysisError::ConstantInput);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// 1-based ranks; ties share the average rank.
fn ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut out = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, AnalysisError> {
    check(x, y)?;
    raw_pearson(x, y)
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, AnalysisError> {
    check(x, y)?;
    raw_pearson(&ranks(x), &ranks(y))
}

fn t_p_value(r: f64, n: usize) -> f64 {
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df is positive");
    (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0)
}

pub fn correlation(x: &[f64], y: &[f64]) -> Result<Correlation, AnalysisError> {
    let p = pearson(x, y)?;
    let s = spearman(x, y)?;
    Ok(Correlation {
        n: x.len(),
        pearson: p,
        pearson_p: t_p_value(p, x.len()),
        spearman: s,
        spearman_p: t_p_value(s, x.len()),
    })
}

/// Exact two-sided p-value: the share of all orderings of `y` whose
/// coefficient is at least as extreme as the observed one.
pub fn permutation_p_value(x: &[f64], y: &[f64], method: Method) -> Result<f64, AnalysisError> {
    check(x, y)?;
    if x.len() > MAX_PERMUTATION_N {
        return Err(AnalysisError::TooLongForPermutation {
            n: x.len(),
            max: MAX_PERMUTATION_N,
        });
    }
    let (x, mut y) = match method {
        Method::Pearson => (x.to_vec(), y.to_vec()),
        Method::Spearman => (ranks(x), ranks(y)),
    };
    let observed = raw_pearson(&x, &y)?.abs();
    let tolerance = 1e-12;
    let (mut hits, mut total) = (0u64, 0u64);
    // Heap's algorithm, iterative
    let n = y.len();
    let mut c = vec![0usize; n];
    let mut visit = |y: &[f64]| {
        total += 1;
        if raw_pearson(&x, y).expect("permutation keeps variance").abs() >= observed - tolerance {
            hits += 1;
        }
    };
    visit(&y);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                y.swap(0, i);
            } else {
                y.swap(c[i], i);
            }
            visit(&y);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(hits as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_linear() {
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap(), 1.0);
    }

    #[test]
    fn spearman_hand_example() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 1.0, 2.0]).unwrap(), -0.5);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(
            correlation(&[1.0, 2.0, 3.0], &[5.0, 5.0, 5.0]),
            Err(AnalysisError::ConstantInput)
        );
        assert_eq!(pearson(&[1.0, 2.0], &[1.0, 2.0]), Err(AnalysisError::TooShort(2)));
        assert_eq!(
            pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0]),
            Err(AnalysisError::LengthMismatch(3, 2))
        );
    }

    #[test]
    fn average_ranks_for_ties() {
        assert_eq!(ranks(&[10.0, 20.0, 10.0, 30.0]), [1.5, 3.0, 1.5, 4.0]);
    }

    #[test]
    fn p_values() {
        let c = correlation(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 1.0, 4.0, 3.0, 5.0]).unwrap();
        assert!((c.pearson - 0.8).abs() < 1e-12);
        // t = 0.8·sqrt(3/0.36) = 2.3094; two-sided p with 3 df
        assert!((c.pearson_p - 0.104_088).abs() < 1e-5);
        let exact = permutation_p_value(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0], Method::Pearson).unwrap();
        // two of six orderings reach |r| = 1
        assert!((exact - 2.0 / 6.0).abs() < 1e-12);
        assert!(permutation_p_value(&[0.0; 11], &[0.0; 11], Method::Spearman).is_err());
    }
}
