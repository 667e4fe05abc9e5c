//! QMC rule families by name, as used in the config and on the command line.

use lsuq_core::forward_uq::StudyRule;
use lsuq_core::qmc::{
    cbc_embedded_lattice, default_weights, embedded_ipl, load_generating_data, GeneratingData, QmcRule,
};
use lsuq_core::{Error, Result};

use crate::config::RunConfig;

fn log2_exact(n: u64, what: &str) -> Result<u32> {
    if n.is_power_of_two() {
        Ok(n.trailing_zeros())
    } else {
        Err(Error::Parameter(format!("{what} needs a power of two, got {n}")))
    }
}

/// Constructor of the rule of size `n` for one family.
pub type RuleFor = Box<dyn Fn(u64) -> Result<QmcRule> + Sync>;

/// Rule family `name` for sizes `n_min..=n_max` in dimension `s`.
pub fn family(name: &str, cfg: &RunConfig, s: usize, n_min: u64, n_max: u64) -> Result<RuleFor> {
    let f = &cfg.forward;
    match name {
        "rlr" => {
            let data = match cfg.generating_data_path() {
                Some(path) => load_generating_data(&path)?,
                None => {
                    let lo = log2_exact(n_min, "embedded lattice")?;
                    let hi = log2_exact(n_max, "embedded lattice")?;
                    let weights = default_weights(cfg.geometry.theta, cfg.geometry.zeta, s);
                    GeneratingData::Lattice {
                        n: n_max,
                        z: cbc_embedded_lattice(lo, hi, s, &weights)?.z,
                    }
                }
            };
            if data.dimension() < s {
                return Err(Error::Dimension {
                    expected: s,
                    got: data.dimension(),
                });
            }
            let data = match data {
                GeneratingData::Lattice { n, mut z } => {
                    z.truncate(s);
                    GeneratingData::Lattice { n, z }
                }
                other => other,
            };
            let big = QmcRule::shifted_lattice(data, f.shift_seed, f.shifts)?;
            Ok(Box::new(move |n| big.restrict(n)))
        }
        "ipl2" | "ipl3" => {
            let alpha = if name == "ipl2" { 2 } else { 3 };
            Ok(Box::new(move |n| {
                let m = log2_exact(n, "interlaced rule")? as usize;
                QmcRule::interlaced(embedded_ipl(alpha, m, s)?)
            }))
        }
        "mc" => {
            let big = QmcRule::monte_carlo(n_max, s, f.shift_seed);
            Ok(Box::new(move |n| big.restrict(n)))
        }
        other => Err(Error::Parameter(format!(
            "unknown rule {other}; expected rlr, ipl2, ipl3 or mc"
        ))),
    }
}

/// Study rules of the forward section, with the optional cross-family
/// reference at `N_ref`.
pub fn study_rules(cfg: &RunConfig, n_list: &[u64], n_ref: u64, names: &[String]) -> Result<Vec<StudyRule<'static>>> {
    let s = cfg.geometry.s;
    let n_min = n_list.first().copied().unwrap_or(n_ref);
    names
        .iter()
        .map(|name| {
            let own = family(name, cfg, s, n_min, n_ref)?;
            let rule_for: RuleFor = if cfg.forward.reference_rule.is_empty() || cfg.forward.reference_rule == *name {
                own
            } else {
                let reference = family(&cfg.forward.reference_rule, cfg, s, n_ref, n_ref)?;
                Box::new(move |n| if n == n_ref { reference(n) } else { own(n) })
            };
            Ok(StudyRule {
                label: name.clone(),
                rule_for,
            })
        })
        .collect()
}
