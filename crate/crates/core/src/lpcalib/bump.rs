use serde::Serialize;

/// Smooth dyadic cutoff: χ = 1 on (0, 1], 0 on [2, ∞), C^∞ in between;
/// φ(ξ) = χ(ξ) − χ(2ξ) is supported in [1/2, 2].
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct LpBump;

fn h(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

impl LpBump {
    pub fn chi(&self, xi: f64) -> f64 {
        if xi <= 1.0 {
            return 1.0;
        }
        if xi >= 2.0 {
            return 0.0;
        }
        let a = h(2.0 - xi);
        a / (a + h(xi - 1.0))
    }

    pub fn phi(&self, xi: f64) -> f64 {
        if !(xi > 0.5 && xi < 2.0) {
            return 0.0;
        }
        self.chi(xi) - self.chi(2.0 * xi)
    }

    pub fn support(&self) -> (f64, f64) {
        (0.5, 2.0)
    }

    /// max |Σ_j φ(2^{−j}ξ) − 1| over the given ξ values.
    pub fn partition_defect(&self, xis: &[f64]) -> f64 {
        xis.iter()
            .map(|&xi| {
                let c = xi.log2().floor() as i32;
                let s: f64 = (c - 2..=c + 2).map(|j| self.phi(2f64.powi(-j) * xi)).sum();
                (s - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }
}
