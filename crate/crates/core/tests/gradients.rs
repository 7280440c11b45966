use slicernn::models::{
    gradient_check, gradient_check_with, Arch, Cell, Dims, Hyper, Truncation, ROUNDOFF_FLOOR,
};
use slicernn::numkernel::Rng;

fn small() -> Dims {
    Dims {
        vocab_size: 20,
        embed_dim: 6,
        hidden_dim: 8,
        num_classes: 4,
        steps: 4,
    }
}

#[test]
fn backward_matches_finite_differences() {
    for arch in Arch::ALL {
        for truncation in Truncation::ALL {
            for l2 in [0.0, 0.009] {
                for mask_pad_slices in [false, true] {
                    let hyper = Hyper {
                        l2,
                        truncation,
                        mask_pad_slices,
                        ..Hyper::default()
                    };
                    let report =
                        gradient_check(arch, small(), 2, &hyper, &mut Rng::new(17), 1e-5, 1e-5)
                            .unwrap();
                    println!("{report}");
                    report.check().unwrap();
                }
            }
        }
    }
}

// Across many random instances a handful of coordinates have true gradients
// near 1e−7, where the central difference itself carries ~1e−11 of round-off
// and the relative error is meaningless. Coordinates whose absolute
// discrepancy exceeds that floor must still agree to 1e−5.
#[test]
fn backward_matches_across_seeds() {
    let mut worst = 0.0f64;
    for seed in 0..40 {
        for arch in Arch::ALL {
            for truncation in Truncation::ALL {
                for l2 in [0.0, 0.009] {
                    let hyper = Hyper {
                        l2,
                        truncation,
                        ..Hyper::default()
                    };
                    let report =
                        gradient_check(arch, small(), 2, &hyper, &mut Rng::new(seed), 1e-5, 1e-5)
                            .unwrap();
                    for t in &report.tensors {
                        assert!(
                            t.resolved_rel_error < 1e-5,
                            "seed {seed} {arch} {truncation} l2={l2}: {} rel {:.3e} abs {:.3e}",
                            t.name,
                            t.resolved_rel_error,
                            t.max_abs_error
                        );
                        assert!(
                            t.max_abs_error < 1e-6,
                            "{} abs {:.3e}",
                            t.name,
                            t.max_abs_error
                        );
                        worst = worst.max(t.resolved_rel_error);
                    }
                }
            }
        }
    }
    println!("worst resolved relative error {worst:.3e} (floor {ROUNDOFF_FLOOR:e})");
}

#[test]
fn corrupted_recurrent_gradient_is_caught() {
    let report = gradient_check_with(
        Arch::ModifiedRnn,
        small(),
        2,
        &Hyper::default(),
        &mut Rng::new(3),
        1e-5,
        1e-5,
        |g| {
            if let Cell::Rnn { w_hh, .. } = &mut g.weights.cell {
                w_hh[(1, 2)] *= 1.01;
            }
        },
    )
    .unwrap();
    assert!(!report.passed());
    assert_eq!(report.worst().name, "W_hh");
    let err = report.check().unwrap_err().to_string();
    assert!(err.contains("W_hh"), "{err}");
}
