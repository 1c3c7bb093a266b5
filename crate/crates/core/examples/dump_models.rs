//! Regenerates the bundled model files under `models/`.
//!
//! `models/surrogate.json` is the 5-gene benchmark network defined in
//! [`netrecon_core::sim::surrogate_model`]; its ground truth is known by
//! construction and all acceptance checks run against it.
//!
//! `models/irma.json` is a hand transcription of the IRMA yeast synthetic
//! network ODE model of Cantone et al. (Cell 137:172-181, 2009), switch-on
//! condition. The published model combines regulators multiplicatively and
//! includes protein-level interactions; this file approximates it with
//! additive Hill terms on the five gene-level interactions plus the delayed
//! SWI5 -> CBF1 activation, so parameter values are indicative rather than
//! verified. Prefer the surrogate wherever ground-truth fidelity matters.

use netrecon_core::sim::{surrogate_model, OdeNetworkModel, RateTerm};

fn irma_model() -> OdeNetworkModel {
    // genes: 0 CBF1, 1 GAL4, 2 SWI5, 3 GAL80, 4 ASH1
    let act = |target: usize, source: usize, v: f64, k: f64, h: f64, delay: f64| {
        RateTerm::Activation {
            target,
            source,
            v,
            k,
            h,
            delay,
        }
    };
    let rep = |target: usize, source: usize, v: f64, k: f64, h: f64| RateTerm::Repression {
        target,
        source,
        v,
        k,
        h,
        delay: 0.0,
    };
    OdeNetworkModel {
        names: vec![
            "CBF1".into(),
            "GAL4".into(),
            "SWI5".into(),
            "GAL80".into(),
            "ASH1".into(),
        ],
        initial: vec![0.01, 0.02, 0.01, 0.02, 0.05],
        terms: vec![
            RateTerm::Basal {
                target: 0,
                v: 0.0004,
            },
            RateTerm::Basal {
                target: 1,
                v: 0.0002,
            },
            RateTerm::Basal {
                target: 2,
                v: 0.0008,
            },
            RateTerm::Basal {
                target: 3,
                v: 0.0005,
            },
            RateTerm::Basal {
                target: 4,
                v: 0.0005,
            },
            act(0, 2, 0.04, 0.04, 2.0, 100.0), // SWI5 -> CBF1, transcriptional delay
            rep(0, 4, 0.015, 0.035, 2.0),      // ASH1 -| CBF1
            act(1, 0, 0.03, 0.01, 2.0, 0.0),   // CBF1 -> GAL4
            act(2, 1, 0.05, 0.015, 2.0, 0.0),  // GAL4 -> SWI5
            rep(2, 3, 0.02, 0.03, 1.0),        // GAL80 -| SWI5 (protein-level in the original)
            act(3, 2, 0.02, 0.02, 2.0, 0.0),   // SWI5 -> GAL80
            act(4, 2, 0.025, 0.02, 2.0, 0.0),  // SWI5 -> ASH1
        ],
        degradation: vec![0.02, 0.015, 0.02, 0.02, 0.025],
        true_edges: vec![[2, 0], [4, 0], [0, 1], [1, 2], [3, 2], [2, 3], [2, 4]],
    }
}

fn main() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models");
    std::fs::create_dir_all(&dir).unwrap();
    surrogate_model()
        .to_json_path(dir.join("surrogate.json"))
        .unwrap();
    let irma = irma_model();
    irma.validate().unwrap();
    irma.to_json_path(dir.join("irma.json")).unwrap();
    println!("wrote {}", dir.display());
}
