use serde::Serialize;
use thiserror::Error;

/// Per-device values by batch size: `values[b][d]` is device `d` at
/// `batch_sizes[b]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub batch_sizes: Vec<u64>,
    pub columns: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(batch_sizes: Vec<u64>, columns: Vec<String>, values: Vec<Vec<f64>>) -> Self {
        assert_eq!(batch_sizes.len(), values.len(), "one row per batch size");
        assert!(
            values.iter().all(|r| r.len() == columns.len()),
            "one value per column"
        );
        Table {
            batch_sizes,
            columns,
            values,
        }
    }

    pub fn column(&self, d: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[d]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("parity needs at least 2 devices, got {0}")]
    TooFewDevices(usize),
    #[error("scaling needs at least 3 batch sizes, got {0}")]
    TooFewBatchSizes(usize),
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Coefficient of variation with the population standard deviation.
/// Infinite when the mean is zero and the values are not all zero.
pub fn coefficient_of_variation(xs: &[f64]) -> f64 {
    let (m, s) = mean_std(xs);
    if s == 0.0 {
        0.0
    } else if m == 0.0 {
        f64::INFINITY
    } else {
        s / m.abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Zero when `y` has no variance, since the fit explains nothing.
    pub r2: f64,
}

/// Ordinary least-squares fit of `y = slope * x + intercept`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> LineFit {
    assert_eq!(xs.len(), ys.len());
    let (mx, _) = mean_std(xs);
    let (my, _) = mean_std(ys);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        0.0
    } else {
        let ss_res: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| (y - (slope * x + intercept)).powi(2))
            .sum();
        1.0 - ss_res / syy
    };
    LineFit {
        slope,
        intercept,
        r2,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParityOutcome {
    pub pass: bool,
    pub cv_bound: f64,
    /// `(batch size, cv across devices)`.
    pub cv_by_batch: Vec<(u64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingOutcome {
    pub pass: bool,
    pub r2_min: f64,
    /// `(device column, fit of value against batch size)`.
    pub fits: Vec<(String, LineFit)>,
}

/// Passes when, for every batch size, the spread of per-device values has a
/// coefficient of variation of at most `cv_bound`.
pub fn check_parity(table: &Table, cv_bound: f64) -> Result<ParityOutcome, CheckError> {
    if table.columns.len() < 2 {
        return Err(CheckError::TooFewDevices(table.columns.len()));
    }
    let cv_by_batch: Vec<(u64, f64)> = table
        .batch_sizes
        .iter()
        .zip(&table.values)
        .map(|(&n, row)| (n, coefficient_of_variation(row)))
        .collect();
    Ok(ParityOutcome {
        pass: cv_by_batch.iter().all(|&(_, cv)| cv <= cv_bound),
        cv_bound,
        cv_by_batch,
    })
}

/// Passes when every device column grows linearly in the batch size: a
/// positive slope and R² of at least `r2_min`.
pub fn check_scaling(table: &Table, r2_min: f64) -> Result<ScalingOutcome, CheckError> {
    if table.batch_sizes.len() < 3 {
        return Err(CheckError::TooFewBatchSizes(table.batch_sizes.len()));
    }
    let xs: Vec<f64> = table.batch_sizes.iter().map(|&n| n as f64).collect();
    let fits: Vec<(String, LineFit)> = table
        .columns
        .iter()
        .enumerate()
        .map(|(d, name)| (name.clone(), fit_line(&xs, &table.column(d))))
        .collect();
    Ok(ScalingOutcome {
        pass: fits.iter().all(|(_, f)| f.slope > 0.0 && f.r2 >= r2_min),
        r2_min,
        fits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let f = fit_line(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]);
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_series_fails_scaling() {
        let t = Table::new(
            vec![50, 100, 150],
            vec!["a".into()],
            vec![vec![4.0], vec![4.0], vec![4.0]],
        );
        let out = check_scaling(&t, 0.9).unwrap();
        assert!(!out.pass);
        assert_eq!(out.fits[0].1.r2, 0.0);
        assert_eq!(out.fits[0].1.slope, 0.0);
    }

    #[test]
    fn preconditions() {
        let one = Table::new(vec![1, 2, 3], vec!["a".into()], vec![vec![1.0]; 3]);
        assert_eq!(check_parity(&one, 0.1), Err(CheckError::TooFewDevices(1)));
        let short = Table::new(vec![1, 2], vec!["a".into(), "b".into()], vec![vec![1.0, 1.0]; 2]);
        assert_eq!(check_scaling(&short, 0.9), Err(CheckError::TooFewBatchSizes(2)));
    }

    #[test]
    fn cv_uses_population_std() {
        let cv = coefficient_of_variation(&[1.0, 3.0]);
        assert!((cv - 0.5).abs() < 1e-12);
        assert_eq!(coefficient_of_variation(&[2.0, 2.0]), 0.0);
    }
}
