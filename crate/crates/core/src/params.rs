//! System parameters shared by the closed forms and the simulator.

use crate::cascade::CascadeChannel;
use crate::error::{domain, Error, Result};

/// Which legitimate receiver or message a metric refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Node {
    U1,
    U2,
    Bd,
}

impl Node {
    pub const ALL: [Node; 3] = [Node::U2, Node::U1, Node::Bd];

    pub fn tag(self) -> &'static str {
        match self {
            Node::U1 => "u1",
            Node::U2 => "u2",
            Node::Bd => "bd",
        }
    }
}

/// Perfect or imperfect successive interference cancellation at the BS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SicMode {
    Perfect,
    Imperfect,
}

/// The jammer coin: `epsilon = 0` means U1 emits the artificial noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonBranch {
    epsilon: u8,
    a: f64,
    b: f64,
}

impl EpsilonBranch {
    pub fn new(epsilon: u8, a1: f64) -> Result<Self> {
        if epsilon > 1 {
            return Err(Error::Contract(format!(
                "epsilon must be 0 or 1, got {epsilon}"
            )));
        }
        let e = f64::from(epsilon);
        Ok(EpsilonBranch {
            epsilon,
            a: 1.0 - e * (1.0 - a1),
            b: 1.0 - (1.0 - e) * (1.0 - a1),
        })
    }

    /// Both branches, each carrying prior probability 1/2.
    pub fn both(a1: f64) -> [EpsilonBranch; 2] {
        [
            EpsilonBranch::new(0, a1).expect("0 is valid"),
            EpsilonBranch::new(1, a1).expect("1 is valid"),
        ]
    }

    pub fn epsilon(&self) -> u8 {
        self.epsilon
    }

    /// Information power fraction of U2.
    pub fn a(&self) -> f64 {
        self.a
    }

    /// Information power fraction of U1.
    pub fn b(&self) -> f64 {
        self.b
    }
}

/// Per-eavesdropper link variances.
#[derive(Debug, Clone, PartialEq)]
pub struct EveEnsemble {
    pub lambda_1j: Vec<f64>,
    pub lambda_2j: Vec<f64>,
    pub lambda_tj: Vec<f64>,
}

impl EveEnsemble {
    pub fn homogeneous(m: usize, lambda_1j: f64, lambda_2j: f64, lambda_tj: f64) -> Self {
        EveEnsemble {
            lambda_1j: vec![lambda_1j; m],
            lambda_2j: vec![lambda_2j; m],
            lambda_tj: vec![lambda_tj; m],
        }
    }

    pub fn m(&self) -> usize {
        self.lambda_1j.len()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.m();
        if self.lambda_2j.len() != m || self.lambda_tj.len() != m {
            return Err(Error::InvalidParameter(format!(
                "eve variance lists differ in length ({}, {}, {})",
                m,
                self.lambda_2j.len(),
                self.lambda_tj.len()
            )));
        }
        for (name, list) in [
            ("lambda_1j", &self.lambda_1j),
            ("lambda_2j", &self.lambda_2j),
            ("lambda_tj", &self.lambda_tj),
        ] {
            if let Some(&v) = list.iter().find(|&&v| !(v > 0.0 && v.is_finite())) {
                return Err(domain(name, v, "(0, inf)"));
            }
        }
        Ok(())
    }
}

/// Full parameter set. `rho` is linear (P/N0); `a2 = 1 - a1` and the SINR
/// thresholds `u = 2^R - 1` are derived on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    pub lambda_1: f64,
    pub lambda_2: f64,
    pub cascade: CascadeChannel,
    pub rho: f64,
    pub eta: f64,
    pub a1: f64,
    pub k1: f64,
    pub k2: f64,
    pub r1: f64,
    pub r2: f64,
    pub rt: f64,
    pub eves: EveEnsemble,
    pub u1_int: f64,
    pub u2_int: f64,
    pub ut_int: f64,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

fn threshold(rate: f64) -> f64 {
    rate.exp2() - 1.0
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams {
            lambda_1: 0.1,
            lambda_2: 1.5,
            cascade: CascadeChannel::new(0.4, 0.5, 0.4).expect("valid defaults"),
            rho: db_to_linear(10.0),
            eta: 0.01,
            a1: 0.8,
            k1: 0.01,
            k2: 0.01,
            r1: 0.5,
            r2: 0.5,
            rt: 0.05,
            eves: EveEnsemble::homogeneous(3, 0.15, 0.15, 0.1),
            u1_int: 0.4,
            u2_int: 0.3,
            ut_int: 0.03,
        }
    }
}

impl SystemParams {
    pub fn a2(&self) -> f64 {
        1.0 - self.a1
    }

    pub fn u1(&self) -> f64 {
        threshold(self.r1)
    }

    pub fn u2(&self) -> f64 {
        threshold(self.r2)
    }

    pub fn ut(&self) -> f64 {
        threshold(self.rt)
    }

    pub fn rho_db(&self) -> f64 {
        linear_to_db(self.rho)
    }

    pub fn with_rho_db(mut self, db: f64) -> Self {
        self.rho = db_to_linear(db);
        self
    }

    /// Sets both residual-SIC factors.
    pub fn with_k(mut self, k: f64) -> Self {
        self.k1 = k;
        self.k2 = k;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda_1", self.lambda_1),
            ("lambda_2", self.lambda_2),
            ("rho", self.rho),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(domain(name, v, "(0, inf)"));
            }
        }
        let unit = [("eta", self.eta), ("k1", self.k1), ("k2", self.k2)];
        for (name, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                return Err(domain(name, v, "[0, 1]"));
            }
        }
        if !(self.a1 > 0.0 && self.a1 <= 1.0) {
            return Err(domain("a1", self.a1, "(0, 1]"));
        }
        for (name, v) in [("R1", self.r1), ("R2", self.r2), ("Rt", self.rt)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(domain(name, v, "[0, inf)"));
            }
        }
        for (name, v) in [
            ("u1_int", self.u1_int),
            ("u2_int", self.u2_int),
            ("ut_int", self.ut_int),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(domain(name, v, "[0, inf)"));
            }
        }
        self.eves.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn branch_coefficients() {
        let b0 = EpsilonBranch::new(0, 0.8).unwrap();
        assert_eq!((b0.a(), b0.b()), (1.0, 0.8));
        let b1 = EpsilonBranch::new(1, 0.8).unwrap();
        assert_eq!((b1.a(), b1.b()), (0.8, 1.0));
        for br in EpsilonBranch::both(1.0) {
            assert_eq!((br.a(), br.b()), (1.0, 1.0));
        }
        assert!(EpsilonBranch::new(2, 0.5).is_err());
    }

    #[test]
    fn defaults_validate() {
        let p = SystemParams::default();
        p.validate().unwrap();
        assert!((p.u1() - (2f64.sqrt() - 1.0)).abs() < 1e-15);
        assert!((p.rho_db() - 10.0).abs() < 1e-12);
        assert_eq!(p.eves.m(), 3);
    }

    #[test]
    fn rejects_out_of_domain() {
        let p = SystemParams {
            eta: 1.5,
            ..SystemParams::default()
        };
        assert!(matches!(
            p.validate(),
            Err(Error::Domain { name: "eta", .. })
        ));
        let p = SystemParams {
            a1: 0.0,
            ..SystemParams::default()
        };
        assert!(p.validate().is_err());
        let mut p = SystemParams::default();
        p.eves.lambda_tj.pop();
        assert!(p.validate().is_err());
    }
}
