use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{check_frequency, PdnError};

/// One element group of the PDN ladder.
///
/// Absent optional values denote ideal elements: a `Shunt` without a
/// resistance is a pure capacitor, a `ShuntBranch` without a capacitance is
/// a series R–L path to ground.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LadderStage {
    /// Z = R + jωL in the supply path.
    Series { resistance: f64, inductance: f64 },
    /// Y = 1/R + jωC to ground (R in parallel with C).
    Shunt {
        resistance: Option<f64>,
        capacitance: f64,
    },
    /// Z = R + jωL + 1/(jωC) to ground, a decoupling capacitor with its
    /// ESR and ESL.
    ShuntBranch {
        resistance: f64,
        inductance: f64,
        capacitance: Option<f64>,
    },
}

impl LadderStage {
    fn values(&self) -> [Option<f64>; 3] {
        match *self {
            LadderStage::Series {
                resistance,
                inductance,
            } => [Some(resistance), Some(inductance), None],
            LadderStage::Shunt {
                resistance,
                capacitance,
            } => [resistance, Some(capacitance), None],
            LadderStage::ShuntBranch {
                resistance,
                inductance,
                capacitance,
            } => [Some(resistance), Some(inductance), capacitance],
        }
    }

    fn is_valid(&self) -> bool {
        self.values()
            .iter()
            .flatten()
            .all(|v| v.is_finite() && *v >= 0.0)
    }
}

/// Lumped PDN equivalent circuit. Stages are ordered from the measurement
/// port outward; the far end is left open.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RlcLadder {
    stages: Vec<LadderStage>,
}

// Node state while folding the ladder from the far end toward the port.
#[derive(Clone, Copy)]
enum Node {
    Open,
    Short,
    Admittance(Complex64),
}

impl Node {
    fn add_admittance(self, y: Node) -> Node {
        match (self, y) {
            (Node::Short, _) | (_, Node::Short) => Node::Short,
            (Node::Open, other) | (other, Node::Open) => other,
            (Node::Admittance(a), Node::Admittance(b)) => Node::Admittance(a + b),
        }
    }
}

fn admittance_of(z: Complex64) -> Node {
    if z == Complex64::new(0.0, 0.0) {
        Node::Short
    } else {
        Node::Admittance(1.0 / z)
    }
}

impl RlcLadder {
    pub fn new(stages: Vec<LadderStage>) -> Result<Self, PdnError> {
        if stages.is_empty() {
            return Err(PdnError::EmptyLadder);
        }
        if let Some(stage) = stages.iter().position(|s| !s.is_valid()) {
            return Err(PdnError::InvalidElement { stage });
        }
        Ok(Self { stages })
    }

    pub fn stages(&self) -> &[LadderStage] {
        &self.stages
    }

    /// Number of plain RC shunt stages (the on-die branches).
    pub fn die_branches(&self) -> usize {
        self.stages
            .iter()
            .filter(|s| matches!(s, LadderStage::Shunt { .. }))
            .count()
    }

    /// A die-to-board PDN seen from a probe on the on-die rails: `die_branches`
    /// on-die R‖C branches separated by on-die grid segments, then package,
    /// board and bulk decoupling, and the VRM output at the far end.
    ///
    /// Element values are generic mid-size FPGA figures; |Z(f)| is set by the
    /// board capacitors in the kHz–MHz range and by the die in the GHz range.
    pub fn reference_pdn(die_branches: usize) -> Self {
        let n = die_branches.max(1);
        let mut stages = Vec::new();
        for i in 0..n {
            if i > 0 {
                stages.push(LadderStage::Series {
                    resistance: 1e-3,
                    inductance: 2e-12,
                });
            }
            stages.push(LadderStage::Shunt {
                resistance: Some(2.0 * n as f64),
                capacitance: 20e-9 / n as f64,
            });
        }
        stages.extend([
            LadderStage::Series {
                resistance: 5e-3,
                inductance: 20e-12,
            },
            LadderStage::ShuntBranch {
                resistance: 20e-3,
                inductance: 0.1e-9,
                capacitance: Some(0.47e-6),
            },
            LadderStage::Series {
                resistance: 2e-3,
                inductance: 0.2e-9,
            },
            LadderStage::ShuntBranch {
                resistance: 10e-3,
                inductance: 0.8e-9,
                capacitance: Some(10e-6),
            },
            LadderStage::Series {
                resistance: 0.5e-3,
                inductance: 1e-9,
            },
            LadderStage::ShuntBranch {
                resistance: 5e-3,
                inductance: 5e-9,
                capacitance: Some(470e-6),
            },
            LadderStage::ShuntBranch {
                resistance: 1e-3,
                inductance: 20e-9,
                capacitance: None,
            },
        ]);
        Self { stages }
    }

    /// Input impedance seen at the port.
    pub fn input_impedance(&self, f_hz: f64) -> Result<Complex64, PdnError> {
        check_frequency(f_hz)?;
        let w = 2.0 * PI * f_hz;
        let j = Complex64::i();
        let mut node = Node::Open;
        for stage in self.stages.iter().rev() {
            node = match *stage {
                LadderStage::Shunt {
                    resistance,
                    capacitance,
                } => {
                    let y = match resistance {
                        Some(r) if r == 0.0 => Node::Short,
                        Some(r) => Node::Admittance(Complex64::new(1.0 / r, w * capacitance)),
                        None if capacitance == 0.0 => Node::Open,
                        None => Node::Admittance(j * w * capacitance),
                    };
                    node.add_admittance(y)
                }
                LadderStage::ShuntBranch {
                    resistance,
                    inductance,
                    capacitance,
                } => {
                    let y = match capacitance {
                        Some(c) if c == 0.0 => Node::Open,
                        Some(c) => admittance_of(
                            Complex64::new(resistance, w * inductance) + 1.0 / (j * w * c),
                        ),
                        None => admittance_of(Complex64::new(resistance, w * inductance)),
                    };
                    node.add_admittance(y)
                }
                LadderStage::Series {
                    resistance,
                    inductance,
                } => {
                    let zs = Complex64::new(resistance, w * inductance);
                    match node {
                        Node::Open => Node::Open,
                        Node::Short => admittance_of(zs),
                        Node::Admittance(y) if y == Complex64::new(0.0, 0.0) => Node::Open,
                        Node::Admittance(y) => admittance_of(1.0 / y + zs),
                    }
                }
            };
        }
        let z = match node {
            Node::Open => return Err(PdnError::ZeroAdmittance { f_hz }),
            Node::Short => Complex64::new(0.0, 0.0),
            Node::Admittance(y) if y == Complex64::new(0.0, 0.0) => {
                return Err(PdnError::ZeroAdmittance { f_hz })
            }
            Node::Admittance(y) => 1.0 / y,
        };
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(PdnError::NonFiniteImpedance { f_hz });
        }
        Ok(z)
    }
}

pub fn rlc_ladder_impedance(ladder: &RlcLadder, f_hz: f64) -> Result<Complex64, PdnError> {
    ladder.input_impedance(f_hz)
}
