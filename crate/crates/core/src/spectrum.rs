//! Input squeezing spectra.
//!
//! A spectrum lists per-mode squeezing in dB, negative meaning below
//! vacuum noise. Mode k enters the pipeline as a squeezed vacuum with
//! p-quadrature variance vac·10^(dB/10) and q-quadrature variance
//! vac·10^(-dB/10), vac = 1/2.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::VACUUM_VARIANCE;

/// Per-mode input squeezing values in dB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SqueezingSpectrum {
    db: Vec<f64>,
}

impl SqueezingSpectrum {
    pub fn from_db(db: Vec<f64>) -> Result<Self> {
        if db.is_empty() {
            return Err(Error::Param("spectrum must contain at least one mode".into()));
        }
        if let Some(bad) = db.iter().find(|v| !v.is_finite()) {
            return Err(Error::Param(format!("non-finite squeezing value {bad}")));
        }
        Ok(SqueezingSpectrum { db })
    }

    /// Constant spectrum: every mode squeezed by `db` dB.
    pub fn equal(n: usize, db: f64) -> Result<Self> {
        SqueezingSpectrum::from_db(vec![db; n])
    }

    /// Uniformly random spectrum in `[lo_db, hi_db]`.
    pub fn uniform_random(n: usize, lo_db: f64, hi_db: f64, rng: &mut impl Rng) -> Result<Self> {
        if !(lo_db.is_finite() && hi_db.is_finite() && lo_db <= hi_db) {
            return Err(Error::Param(format!(
                "bad uniform spectrum range [{lo_db}, {hi_db}]"
            )));
        }
        let db = (0..n)
            .map(|_| lo_db + (hi_db - lo_db) * rng.random::<f64>())
            .collect();
        SqueezingSpectrum::from_db(db)
    }

    /// Documented stand-in for a realistic 48-mode source.
    ///
    /// Parametric sources produce supermodes whose squeezing values come in
    /// near-degenerate pairs; this list mimics that shape with 24 levels,
    /// each doubled, linearly spaced from -6.51 dB (best) to -3.10 dB. The
    /// pairing at the top matters for squeezing concentration: the two
    /// targeted nullifiers can then both reach the best available value.
    pub fn standin_48() -> Self {
        let mut db = Vec::with_capacity(48);
        for level in 0..24 {
            let s = -6.51 + 3.41 * level as f64 / 23.0;
            db.push(s);
            db.push(s);
        }
        SqueezingSpectrum { db }
    }

    /// Parses one dB value per line; blank lines and `#` comments ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut db = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let v: f64 = line
                .parse()
                .map_err(|_| Error::Format(format!("line {}: bad dB value `{line}`", ln + 1)))?;
            db.push(v);
        }
        SqueezingSpectrum::from_db(db)
    }

    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        for v in &self.db {
            out.push_str(&format!("{v}\n"));
        }
        out
    }

    pub fn len(&self) -> usize {
        self.db.len()
    }

    pub fn is_empty(&self) -> bool {
        self.db.is_empty()
    }

    pub fn db_values(&self) -> &[f64] {
        &self.db
    }

    /// Squeezed-quadrature variances vac·10^(dB/10).
    pub fn p_variances(&self) -> Vec<f64> {
        self.db
            .iter()
            .map(|s| VACUUM_VARIANCE * 10f64.powf(s / 10.0))
            .collect()
    }

    /// Anti-squeezed-quadrature variances vac·10^(-dB/10).
    pub fn q_variances(&self) -> Vec<f64> {
        self.db
            .iter()
            .map(|s| VACUUM_VARIANCE * 10f64.powf(-s / 10.0))
            .collect()
    }

    /// Strongest squeezing on the list (most negative dB).
    pub fn best_db(&self) -> f64 {
        self.db.iter().copied().fold(f64::INFINITY, f64::min)
    }
}
