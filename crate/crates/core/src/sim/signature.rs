use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::crypto::BitId;
use crate::grid::FrequencyGrid;
use crate::rng;

/// Lobe profiles are truncated to zero beyond this many bandwidths from the
/// center (e^{-16} ≈ 1e-7 of the peak).
pub const LOBE_SUPPORT: f64 = 4.0;

/// One resonance lobe of a register bit's frequency response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lobe {
    pub center_hz: f64,
    pub bandwidth_hz: f64,
    /// Peak magnitude deflection, dB.
    pub magnitude_db: f64,
    /// Peak phase deflection, degrees.
    pub phase_deg: f64,
}

impl Lobe {
    /// Gaussian weight exp(−((f − center)/bandwidth)²), zero outside the
    /// support window.
    pub fn profile(&self, f_hz: f64) -> f64 {
        let x = (f_hz - self.center_hz) / self.bandwidth_hz;
        if x.abs() > LOBE_SUPPORT {
            0.0
        } else {
            (-x * x).exp()
        }
    }

    pub fn support_hz(&self) -> (f64, f64) {
        let h = LOBE_SUPPORT * self.bandwidth_hz;
        (self.center_hz - h, self.center_hz + h)
    }

    pub fn is_null(&self) -> bool {
        self.magnitude_db == 0.0 && self.phase_deg == 0.0
    }
}

/// The lobes a register bit adds to the baseline while it holds a one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitSignature {
    pub owner: BitId,
    pub lobes: Vec<Lobe>,
}

impl BitSignature {
    pub fn validate(&self, grid: &FrequencyGrid) -> Result<(), SimError> {
        let bad = |reason: String| SimError::InvalidSignature {
            bit: self.owner.clone(),
            reason,
        };
        if self.lobes.is_empty() {
            return Err(bad("no lobes".into()));
        }
        for l in &self.lobes {
            if !(l.bandwidth_hz.is_finite() && l.bandwidth_hz > 0.0) {
                return Err(bad(format!("bandwidth {} must be > 0", l.bandwidth_hz)));
            }
            if !grid.contains(l.center_hz) {
                return Err(bad(format!("center {} Hz outside the grid", l.center_hz)));
            }
            if !(l.magnitude_db.is_finite() && l.phase_deg.is_finite()) {
                return Err(bad("non-finite deflection".into()));
            }
        }
        Ok(())
    }

    /// True when no lobe deflects anything.
    pub fn is_null(&self) -> bool {
        self.lobes.iter().all(Lobe::is_null)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    /// Lobe supports of different bits never overlap.
    #[default]
    Disjoint,
    /// Centers drawn uniformly over the band; lobes may overlap.
    Overlapping,
}

/// Ranges from which per-bit lobes are drawn. All ranges are inclusive
/// `[min, max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignaturePolicy {
    pub lobes_per_bit: [u32; 2],
    pub bandwidth_hz: [f64; 2],
    pub magnitude_db: [f64; 2],
    pub phase_deg: [f64; 2],
    #[serde(default)]
    pub placement: Placement,
}

impl SignaturePolicy {
    /// One lobe per bit, 0.8–1.2 grid steps wide, 0.01–0.05 dB and
    /// 0.2–0.5° deflection.
    pub fn for_grid(grid: &FrequencyGrid, placement: Placement) -> Self {
        let step = grid.step_hz();
        Self {
            lobes_per_bit: [1, 1],
            bandwidth_hz: [0.8 * step, 1.2 * step],
            magnitude_db: [0.01, 0.05],
            phase_deg: [0.2, 0.5],
            placement,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |s: &str| Err(SimError::InvalidPolicy(s.into()));
        let [l0, l1] = self.lobes_per_bit;
        if l0 < 1 || l1 < l0 {
            return bad("lobes_per_bit must satisfy 1 <= min <= max");
        }
        let [b0, b1] = self.bandwidth_hz;
        if !(b0.is_finite() && b1.is_finite() && b0 > 0.0 && b1 >= b0) {
            return bad("bandwidth_hz must satisfy 0 < min <= max");
        }
        for (name, [a, b]) in [("magnitude_db", self.magnitude_db), ("phase_deg", self.phase_deg)] {
            if !(a.is_finite() && b.is_finite() && a <= b) {
                return Err(SimError::InvalidPolicy(format!(
                    "{name} must be a finite range with min <= max"
                )));
            }
        }
        Ok(())
    }

    /// Draw signatures for `bits`. Shapes come from a stream keyed by
    /// `(seed, bit)`; disjoint slot assignment from a stream keyed by `seed`.
    pub fn generate(
        &self,
        grid: &FrequencyGrid,
        bits: &[BitId],
        seed: u64,
    ) -> Result<Vec<BitSignature>, SimError> {
        self.validate()?;
        // Shapes first: lobe count, bandwidth and deflections per bit.
        let mut shapes: Vec<(BitId, Vec<(f64, f64, f64, f64)>)> = Vec::with_capacity(bits.len());
        for bit in bits {
            let mut r = rng::stream(seed, &format!("signature:{bit}"), 0);
            let n = r.random_range(self.lobes_per_bit[0]..=self.lobes_per_bit[1]);
            let lobes = (0..n)
                .map(|_| {
                    let bw = r.random_range(self.bandwidth_hz[0]..=self.bandwidth_hz[1]);
                    let mag = r.random_range(self.magnitude_db[0]..=self.magnitude_db[1]);
                    let ph = r.random_range(self.phase_deg[0]..=self.phase_deg[1]);
                    let u: f64 = r.random();
                    (bw, mag, ph, u)
                })
                .collect();
            shapes.push((bit.clone(), lobes));
        }

        let total: usize = shapes.iter().map(|(_, l)| l.len()).sum();
        let half = LOBE_SUPPORT * self.bandwidth_hz[1];
        let span = grid.span_hz();

        let centers: Vec<f64> = match self.placement {
            Placement::Overlapping => shapes
                .iter()
                .flat_map(|(_, l)| l.iter().map(|&(_, _, _, u)| grid.start_hz() + u * span))
                .collect(),
            Placement::Disjoint => {
                let slot = span / total.max(1) as f64;
                let needed = (2.0 * half).max(grid.step_hz());
                if slot < needed {
                    return Err(SimError::GridTooCoarse {
                        lobes: total,
                        needed_hz: needed,
                        available_hz: slot,
                    });
                }
                let mut order: Vec<usize> = (0..total).collect();
                order.shuffle(&mut rng::stream(seed, "placement", 0));
                let slack = slot - 2.0 * half;
                shapes
                    .iter()
                    .flat_map(|(_, l)| l.iter().map(|&(_, _, _, u)| u))
                    .zip(order)
                    .map(|(u, k)| grid.start_hz() + k as f64 * slot + half + u * slack)
                    .collect()
            }
        };

        let mut it = centers.into_iter();
        let sigs = shapes
            .into_iter()
            .map(|(owner, lobes)| BitSignature {
                owner,
                lobes: lobes
                    .into_iter()
                    .map(|(bw, mag, ph, _)| Lobe {
                        center_hz: it.next().expect("one center per lobe"),
                        bandwidth_hz: bw,
                        magnitude_db: mag,
                        phase_deg: ph,
                    })
                    .collect(),
            })
            .collect();
        Ok(sigs)
    }
}
