#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mbar"))
}

pub fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("spawn mbar")
}

pub fn run_ok(dir: &Path, args: &[&str]) -> Output {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "mbar {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

/// Small deterministic generator so fixtures do not depend on a crate.
pub struct SplitMix(pub u64);

impl SplitMix {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// `users x items` pairs rated `trials` times on 1..=5; a pair keeps its
/// base rating with probability 3/5 and moves one step otherwise.
pub fn synthetic_tensor(users: usize, items: usize, trials: u32, seed: u64) -> String {
    let mut rng = SplitMix(seed);
    let mut s = String::from("user,item,trial,rating\n");
    for u in 0..users {
        for i in 0..items {
            let base = 1 + rng.below(5) as i64;
            for t in 1..=trials {
                let step = match rng.below(5) {
                    0 => -1,
                    1 => 1,
                    _ => 0,
                };
                let r = (base + step).clamp(1, 5);
                writeln!(s, "u{u},i{i},{t},{r}").unwrap();
            }
        }
    }
    s
}

pub fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

impl SplitMix {
    /// Standard normal by Box-Muller.
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.unit();
        let u2 = self.unit();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }
}

pub fn phi(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// `P(sqrt((X1^2 + X2^2) / 2) <= r)` for independent `X_i ~ N(d_i, v_i)`,
/// integrated over the circle of radius `sqrt(2) r` in polar form.
pub fn rmse2_cdf(r: f64, d: [f64; 2], v: [f64; 2]) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let rho = std::f64::consts::SQRT_2 * r;
    let (s1, s2) = (v[0].sqrt(), v[1].sqrt());
    let n = 2000;
    let h = std::f64::consts::PI / n as f64;
    let f = |t: f64| {
        let x = rho * t.sin();
        let y = rho * t.cos();
        let dens = (-(x - d[0]).powi(2) / (2.0 * v[0])).exp() / (s1 * (2.0 * std::f64::consts::PI).sqrt());
        dens * (phi((y - d[1]) / s2) - phi((-y - d[1]) / s2)) * rho * t.cos()
    };
    let a = -std::f64::consts::FRAC_PI_2;
    let mut acc = f(a) + f(-a);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Base-2 Jensen-Shannon divergence of two mass vectors on shared bins.
pub fn jsd_bits(p: &[f64], q: &[f64]) -> f64 {
    let kl = |a: &[f64], m: &[f64]| -> f64 {
        a.iter()
            .zip(m)
            .filter(|(x, _)| **x > 0.0)
            .map(|(x, y)| x * (x / y).log2())
            .sum()
    };
    let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect();
    0.5 * kl(p, &m) + 0.5 * kl(q, &m)
}

/// Ordinary least squares of `y` on `x`: `(slope, intercept, r_squared)`.
pub fn regress(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx, sxy * sxy / (sxx * syy))
}
