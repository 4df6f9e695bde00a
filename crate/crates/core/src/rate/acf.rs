use super::ConjugateLinkSet;

/// Normalised autocorrelation at lags `1..len`.
///
/// The mean is removed and the result is scaled so that lag 0 (omitted) would
/// equal 1. A constant input has no defined correlation and returns zeros.
pub fn acf(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n < 2 {
        return Vec::new();
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let d: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let energy: f64 = d.iter().map(|v| v * v).sum();
    if energy == 0.0 {
        return vec![0.0; n - 1];
    }
    (1..n)
        .map(|lag| d[..n - lag].iter().zip(&d[lag..]).map(|(a, b)| a * b).sum::<f64>() / energy)
        .collect()
}

/// ACF columns of every derived link: for each link, one column per
/// subcarrier magnitude followed by one per subcarrier phase.
#[derive(Debug, Clone, PartialEq)]
pub struct AcfMatrix {
    lags: usize,
    columns: usize,
    /// column-major
    data: Vec<f64>,
}

impl AcfMatrix {
    pub fn from_columns(lags: usize, columns: Vec<Vec<f64>>) -> Self {
        assert!(columns.iter().all(|c| c.len() == lags), "ragged ACF columns");
        let n = columns.len();
        Self { lags, columns: n, data: columns.into_iter().flatten().collect() }
    }

    pub fn lags(&self) -> usize {
        self.lags
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.lags..(j + 1) * self.lags]
    }

    pub fn iter_columns(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.lags.max(1)).take(self.columns)
    }
}

pub fn build_acf_matrix(cm: &ConjugateLinkSet) -> AcfMatrix {
    let lags = cm.len().saturating_sub(1);
    let k = cm.subcarriers();
    let mut columns = Vec::with_capacity(2 * k * cm.links());
    for link in 0..cm.links() {
        columns.extend((0..k).map(|f| acf(&cm.magnitude(link, f))));
        columns.extend((0..k).map(|f| acf(&cm.phase(link, f))));
    }
    AcfMatrix::from_columns(lags, columns)
}
