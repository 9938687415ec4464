//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use impedance_sca::crypto::BitId;
use impedance_sca::grid::FrequencyGrid;
use impedance_sca::pdn::{LadderStage, EPSILON_0, MU_0};
use nalgebra::{DMatrix, DVector};
use impedance_sca::rng::stream;
use impedance_sca::trace::{Channel, ComplexTrace, TraceBatch, TraceMeta};
use num_complex::Complex64;
use rand::Rng;

/// Reflection of a unit plane wave at a dielectric slab in free space,
/// from the four interface conditions (E and H continuous at z = 0 and
/// z = L) solved as a dense linear system. Unknowns: reflected r, slab
/// forward a, slab backward b, transmitted t.
pub fn boundary_solve_s11(f_hz: f64, eps_r: f64, length_m: f64) -> Complex64 {
    let w = 2.0 * std::f64::consts::PI * f_hz;
    let eta0 = (MU_0 / EPSILON_0).sqrt();
    let eta = (MU_0 / (EPSILON_0 * eps_r)).sqrt();
    let k0 = w * (MU_0 * EPSILON_0).sqrt();
    let k = w * (MU_0 * EPSILON_0 * eps_r).sqrt();
    let j = Complex64::i();
    let e = |x: Complex64| x.exp();
    let fwd = e(-j * k * length_m);
    let bwd = e(j * k * length_m);
    let out = e(-j * k0 * length_m);
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(4, 4, &[
        // 1 + r = a + b
        -one, one, one, zero,
        // (1 − r)/η0 = (a − b)/η
        one / eta0, one / eta, -one / eta, zero,
        // a e^{-jkL} + b e^{jkL} = t e^{-jk0L}
        zero, fwd, bwd, -out,
        // (a e^{-jkL} − b e^{jkL})/η = t e^{-jk0L}/η0
        zero, fwd / eta, -bwd / eta, -out / eta0,
    ]);
    let rhs = DVector::from_vec(vec![one, one / eta0, zero, zero]);
    let x = m.lu().solve(&rhs).expect("boundary system is regular");
    x[0]
}

/// Port impedance of a ladder by nodal analysis: one node per series
/// element boundary, 1 A injected at the port.
pub fn ladder_nodal_impedance(stages: &[LadderStage], f_hz: f64) -> Complex64 {
    let w = 2.0 * std::f64::consts::PI * f_hz;
    let j = Complex64::i();
    let nodes = 1 + stages
        .iter()
        .filter(|s| matches!(s, LadderStage::Series { .. }))
        .count();
    let mut y = DMatrix::<Complex64>::zeros(nodes, nodes);
    let mut node = 0;
    for s in stages {
        match *s {
            LadderStage::Series { resistance, inductance } => {
                let g = 1.0 / Complex64::new(resistance, w * inductance);
                y[(node, node)] += g;
                y[(node + 1, node + 1)] += g;
                y[(node, node + 1)] -= g;
                y[(node + 1, node)] -= g;
                node += 1;
            }
            LadderStage::Shunt { resistance, capacitance } => {
                y[(node, node)] += j * w * capacitance + resistance.map_or(0.0, |r| 1.0 / r);
            }
            LadderStage::ShuntBranch { resistance, inductance, capacitance } => {
                let z = Complex64::new(resistance, w * inductance)
                    + capacitance.map_or(Complex64::new(0.0, 0.0), |c| 1.0 / (j * w * c));
                y[(node, node)] += 1.0 / z;
            }
        }
    }
    let mut rhs = DVector::<Complex64>::zeros(nodes);
    rhs[0] = Complex64::new(1.0, 0.0);
    y.lu().solve(&rhs).expect("grounded ladder")[0]
}

fn gf_mul(mut a: u8, mut b: u8) -> u8 {
    let mut p = 0u8;
    while b != 0 {
        if b & 1 == 1 {
            p ^= a;
        }
        let hi = a & 0x80;
        a <<= 1;
        if hi != 0 {
            a ^= 0x1b;
        }
        b >>= 1;
    }
    p
}

/// AES S-box from its definition: multiplicative inverse in GF(2^8)
/// followed by the affine map.
pub fn gf_sbox(x: u8) -> u8 {
    let inv = if x == 0 {
        0
    } else {
        (1..=255u8).find(|&y| gf_mul(x, y) == 1).unwrap()
    };
    let mut s = 0x63u8;
    for i in 0..8 {
        let bit = ((inv >> i) ^ (inv >> ((i + 4) % 8)) ^ (inv >> ((i + 5) % 8))
            ^ (inv >> ((i + 6) % 8)) ^ (inv >> ((i + 7) % 8)))
            & 1;
        s ^= bit << i;
    }
    s
}

/// Literal difference-of-means attack: for every key guess, split the
/// traces by the selected S-box output bits, take |mean1 − mean0| per
/// feature, sum over bits, and score by the mean over features. `None` rows
/// mark guesses with an empty class.
pub fn brute_force_dima(
    features: &[Vec<f64>],
    plaintexts: &[u8],
    bits: &[u8],
    sbox: impl Fn(u8) -> u8,
    keys: std::ops::Range<u16>,
) -> Vec<Option<(Vec<f64>, f64)>> {
    let f = features[0].len();
    keys.map(|k| {
        let mut total = vec![0.0; f];
        for &b in bits {
            let mut s = [vec![0.0; f], vec![0.0; f]];
            let mut n = [0usize; 2];
            for (x, &p) in features.iter().zip(plaintexts) {
                let c = ((sbox(k as u8 ^ p) >> b) & 1) as usize;
                n[c] += 1;
                for (acc, v) in s[c].iter_mut().zip(x) {
                    *acc += v;
                }
            }
            if n[0] == 0 || n[1] == 0 {
                return None;
            }
            for i in 0..f {
                total[i] += (s[1][i] / n[1] as f64 - s[0][i] / n[0] as f64).abs();
            }
        }
        let score = total.iter().sum::<f64>() / f as f64;
        Some((total, score))
    })
    .collect()
}

/// Linear grid used by most scenario tests.
pub fn grid(start_hz: f64, stop_hz: f64, points: usize) -> FrequencyGrid {
    FrequencyGrid::new(start_hz, stop_hz, points).unwrap()
}

/// Key-share bits of `shares` shares of byte 0.
pub fn share_bits(shares: u8) -> Vec<BitId> {
    BitId::key_share_bits(shares, [0u8])
}

/// One-sample Kolmogorov–Smirnov statistic against U(0, 1).
pub fn ks_uniform(samples: &[f64]) -> f64 {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let lo = x - i as f64 / n;
            let hi = (i + 1) as f64 / n - x;
            lo.max(hi)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic two-sided KS critical value at significance 0.01.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

/// Random phase/magnitude traces with one random plaintext byte each; also
/// returns the phase features and plaintexts as plain vectors.
pub fn random_batch(seed: u64, n: usize, features: usize) -> (TraceBatch, Vec<Vec<f64>>, Vec<u8>) {
    let mut r = stream(seed, "dima-batch", 0);
    let g = grid(1e9, 2e9, features);
    let mut pts = Vec::new();
    let mut rows = Vec::new();
    let traces: Vec<ComplexTrace> = (0..n)
        .map(|_| {
            let p: u8 = r.random();
            let s: Vec<Complex64> = (0..features)
                .map(|_| Complex64::from_polar(r.random_range(0.5..1.0), r.random_range(-3.0..3.0)))
                .collect();
            pts.push(p);
            ComplexTrace::new(g, s).unwrap().with_meta(TraceMeta {
                plaintext: vec![p],
                ..Default::default()
            })
        })
        .collect();
    let b = TraceBatch::new(g, traces, Channel::PhaseDeg).unwrap();
    for row in b.feature_matrix().rows() {
        rows.push(row.to_vec());
    }
    (b, rows, pts)
}

