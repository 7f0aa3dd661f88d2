//! Sweeps behind the five result figures.

use std::str::FromStr;

use ambc_core::{EveEnsemble, SystemParams};

use crate::config::{Config, Numerics};
use crate::sweep::{
    spaced, stepped, Axis, Mode, Output, Series, Spacing, SweepSpec, DEFAULT_TRIALS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// OPs versus rho with the OMA baseline.
    Fig2,
    /// IPs versus rho for several a1.
    Fig3,
    /// OPs and BD IP versus eta at 10 dB.
    Fig4,
    /// IPs versus a1 at 15 dB.
    Fig5,
    /// OPs versus a1 at 15 dB.
    Fig6,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::Fig2,
        Preset::Fig3,
        Preset::Fig4,
        Preset::Fig5,
        Preset::Fig6,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
            Preset::Fig5 => "fig5",
            Preset::Fig6 => "fig6",
        }
    }

    pub fn config(self) -> Config {
        let base = SystemParams::default();
        let three_modes = vec![
            Mode::Perfect,
            Mode::Imperfect(Some(0.001)),
            Mode::Imperfect(Some(0.01)),
        ];
        let ops = [Output::OpU2, Output::OpU1, Output::OpBd];
        let ips = [Output::IpU2, Output::IpU1, Output::IpBd];
        let a1_axis = stepped(0.05, 0.95, 0.05).expect("static grid");
        let spec = |axis, points, modes, outputs: &[Output]| SweepSpec {
            axis,
            points,
            series: None,
            modes,
            outputs: outputs.to_vec(),
            mc_trials: DEFAULT_TRIALS,
            seed: 0,
        };
        let (params, sweep) = match self {
            Preset::Fig2 => {
                let mut out = ops.to_vec();
                out.extend([Output::Floors, Output::Mc, Output::Oma]);
                (
                    base,
                    spec(
                        Axis::RhoDb,
                        stepped(-5.0, 20.0, 1.0).expect("static grid"),
                        three_modes,
                        &out,
                    ),
                )
            }
            Preset::Fig3 => {
                let params = SystemParams {
                    eves: EveEnsemble::homogeneous(3, 0.1, 0.1, 0.1),
                    ..base
                };
                let mut out = ips.to_vec();
                out.extend([Output::Asymptotes, Output::Mc]);
                let mut s = spec(
                    Axis::RhoDb,
                    stepped(-5.0, 30.0, 1.0).expect("static grid"),
                    vec![],
                    &out,
                );
                s.series = Some(Series {
                    axis: Axis::A1,
                    values: vec![0.5, 0.7, 0.9],
                });
                (params, s)
            }
            Preset::Fig4 => {
                let mut out = ops.to_vec();
                out.push(Output::IpBd);
                let eta = spaced(0.001, 0.2, 24, Spacing::Log).expect("static grid");
                let modes = vec![Mode::Perfect, Mode::Imperfect(Some(0.01))];
                (base.with_rho_db(10.0), spec(Axis::Eta, eta, modes, &out))
            }
            Preset::Fig5 => (
                base.with_rho_db(15.0),
                spec(Axis::A1, a1_axis, vec![], &ips),
            ),
            Preset::Fig6 => (
                base.with_rho_db(15.0),
                spec(Axis::A1, a1_axis, three_modes, &ops),
            ),
        };
        Config {
            params,
            sweep,
            numerics: Numerics::default(),
        }
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown preset '{s}' (expected fig2..fig6)"))
    }
}
