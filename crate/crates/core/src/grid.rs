/// Grid resolutions used by the analytic functionals.
///
/// The defaults are part of the output contract: KDD values are defined as
/// the maximum over these grids, so changing them changes reported numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct GridConfig {
    /// Points per axis of the uniform KDD grid on `[0, 1]`.
    pub kdd: usize,
    /// Points per axis of the local zoom around the KDD argmax.
    pub zoom: usize,
    /// Points per axis of the quadrant-dependence grid.
    pub qpd: usize,
    /// Points of the uniform z-grid used for suprema over conditionals.
    pub z: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            kdd: 201,
            zoom: 21,
            qpd: 101,
            z: 257,
        }
    }
}

impl GridConfig {
    pub(crate) fn validate(&self) -> crate::Result<()> {
        for (name, v) in [
            ("kdd", self.kdd),
            ("zoom", self.zoom),
            ("qpd", self.qpd),
            ("z", self.z),
        ] {
            if v < 2 {
                return Err(crate::Error::Usage(format!(
                    "grid size `{name}` must be at least 2, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// `n` equally spaced points on `[0, 1]`, endpoints included.
pub(crate) fn unit_grid(n: usize) -> Vec<f64> {
    let last = (n - 1) as f64;
    (0..n).map(|i| i as f64 / last).collect()
}
