//! Acceptance criteria, one line each. Sample counts and tolerances are set
//! here rather than taken from the default configurations.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use confocal_core::verify::{CheckConfig, CheckName, VerificationReport};

const SEED: u64 = 20_240_917;

struct Suite {
    reports: BTreeMap<CheckName, VerificationReport>,
    failures: usize,
}

impl Suite {
    fn run(&mut self, check: CheckName, edit: impl FnOnce(&mut CheckConfig)) {
        let mut cfg = CheckConfig { seed: SEED, ..check.default_config() };
        edit(&mut cfg);
        match check.run(&cfg) {
            Ok(r) => {
                self.reports.insert(check, r);
            }
            Err(e) => println!("  {check}: error {e}"),
        }
    }

    /// Worst residual among keys of `check` ending in one of `suffixes`, and
    /// how many keys matched.
    fn worst(&self, check: CheckName, keys: &[&str]) -> Option<(f64, usize)> {
        let r = self.reports.get(&check)?;
        let hits: Vec<f64> =
            r.residuals.iter().filter(|(k, _)| keys.iter().any(|s| k.ends_with(s))).map(|(_, v)| *v).collect();
        let worst = hits.iter().fold(0.0f64, |m, v| if v.is_nan() || *v > m { *v } else { m });
        Some((worst, hits.len()))
    }

    /// One criterion: every `(check, key suffixes, tolerance)` group must
    /// match at least one residual and stay within its tolerance.
    fn criterion(&mut self, n: u32, title: &str, groups: &[(CheckName, &[&str], f64)]) {
        let mut ok = true;
        let mut detail = Vec::new();
        for (check, keys, tol) in groups {
            match self.worst(*check, keys) {
                Some((w, count)) if count > 0 => {
                    ok &= w <= *tol;
                    detail.push(format!("{check}[{}] {w:.2e} <= {tol:.0e}", keys.join("|")));
                }
                _ => {
                    ok = false;
                    detail.push(format!("{check}[{}] missing", keys.join("|")));
                }
            }
        }
        if !ok {
            self.failures += 1;
        }
        println!("criterion {n:>2} {}  {title}: {}", if ok { "PASS" } else { "FAIL" }, detail.join(", "));
    }
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut s = Suite { reports: BTreeMap::new(), failures: 0 };
    use CheckName::*;

    s.run(Lemma1, |c| c.samples = 1000);
    s.run(Lemma3, |c| c.samples = 1000);
    s.run(Shell, |c| c.samples = 20);
    s.run(Theorem1, |c| {
        c.shifts = vec![-0.5, 2.0, 5.0];
        c.samples = 20;
        c.mass = 1.0;
    });
    s.run(Corollary1, |c| {
        c.shifts = vec![-0.5, 2.0, 5.0];
        c.samples = 20;
        c.mass = 1.0;
    });
    s.run(Corollary2, |c| {
        c.shifts = vec![5.0];
        c.samples = 100;
    });
    s.run(Theorem2, |c| {
        c.shifts = vec![0.3, 0.6];
        c.samples = 20;
        c.mass = 1.0;
    });
    s.run(Lemma2, |c| c.samples = 20);
    s.run(Lemma6, |c| c.samples = 20);
    s.run(Lemma5, |c| c.samples = 100);
    s.run(Interior, |c| c.samples = 50);
    s.run(Lemma4, |_| {});
    s.run(Focaloid, |c| c.thickness = 1e-3);
    s.run(Chasles, |c| c.samples = 5);
    s.run(Hygiene, |c| c.samples = 20);

    s.criterion(
        1,
        "exact and float Ivory identity",
        &[(Lemma1, &["exact_nonzero"], 0.0), (Lemma1, &["float_relative"], 1e-12)],
    );
    s.criterion(2, "spherical identities A, B, C", &[(Lemma3, &["A", "B", "C"], 1e-12)]);
    s.criterion(
        3,
        "Euclidean shell oracle",
        &[
            (Shell, &["base1/exterior", "base1/interior"], 1e-8),
            (Shell, &["base0/exterior", "base0/interior", "base2/exterior", "base2/interior"], 1e-6),
        ],
    );
    s.criterion(4, "spherical shell oracle", &[(Shell, &["base3/cap", "base3/band", "base3/antipodal"], 1e-6)]);
    s.criterion(5, "confocal exterior equality", &[(Theorem1, &["dV", "dF"], 1e-6), (Corollary1, &["dV", "dF"], 1e-6)]);
    s.criterion(6, "equipotential confocal surface", &[(Corollary2, &["spread"], 1e-6)]);
    s.criterion(7, "spherical exterior equality", &[(Theorem2, &["dV"], 1e-6)]);
    s.criterion(8, "Ivory reciprocity", &[(Lemma2, &["dV"], 1e-6), (Lemma6, &["dV"], 1e-6)]);
    s.criterion(9, "density correspondence", &[(Lemma5, &["density"], 1e-9), (Lemma5, &["mc_sigma"], 3.0)]);
    s.criterion(10, "interior constancy", &[(Interior, &["force", "spread"], 1e-7), (Lemma4, &["spread"], 1e-6)]);
    s.criterion(
        11,
        "focaloid suite",
        &[(Focaloid, &["thick/dV", "half_thick/dV", "richardson/dV"], 1e-5), (Focaloid, &["fit"], 1e-6)],
    );
    s.criterion(12, "three-homeoid chain", &[(Chasles, &["chain"], 1e-6)]);

    // rerun everything under the same seed and compare bit for bit
    let first: Vec<_> = s.reports.values().map(VerificationReport::without_time).collect();
    let mut again = Suite { reports: BTreeMap::new(), failures: 0 };
    for (check, r) in &s.reports {
        let cfg = r.config.clone();
        if let Ok(r) = check.run(&cfg) {
            again.reports.insert(*check, r);
        }
    }
    let second: Vec<_> = again.reports.values().map(VerificationReport::without_time).collect();
    let identical = first == second;
    let mut hygiene = s.worst(Hygiene, &["gradient"]).map(|(w, _)| w <= 1e-5).unwrap_or(false);
    hygiene &= s.worst(Hygiene, &["doubling"]).map(|(w, _)| w <= 0.1).unwrap_or(false);
    hygiene &= s.worst(Hygiene, &["reproducibility"]).map(|(w, _)| w == 0.0).unwrap_or(false);
    s.criterion(
        13,
        "numerical hygiene",
        &[(Hygiene, &["gradient"], 1e-5), (Hygiene, &["doubling"], 0.1), (Hygiene, &["reproducibility"], 0.0)],
    );
    if !identical {
        s.failures += 1;
        println!("criterion 13 FAIL  full suite rerun is not bit-identical");
    } else if hygiene {
        println!("criterion 13 PASS  full suite rerun is bit-identical ({} reports)", first.len());
    }

    let flagged: Vec<_> = s.reports.values().filter(|r| r.tolerance_limited).map(|r| r.name.clone()).collect();
    if !flagged.is_empty() {
        println!("tolerance-limited: {}", flagged.join(", "));
    }
    for r in s.reports.values().filter(|r| !r.pass) {
        println!("report {} did not pass", r.name);
    }
    println!("{} of 13 criteria failed, {:.1} s", s.failures, start.elapsed().as_secs_f64());
    if s.failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
