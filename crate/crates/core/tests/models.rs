use slicernn::corpus::{
    plan_epoch, prepare, synth_corpus, EncodedReview, PlantSpec, PrepareOptions, ReviewBatch,
    EOS_ID, PAD_ID,
};
use slicernn::models::{
    active_points, backward, compute_loss, forward, forward_batch, init_params, predict_batch,
    sgd_step, Arch, Cell, Dims, Hyper, Mode, Params,
};
use slicernn::numkernel::{seeded_uniform, Matrix, Rng};

fn dims(classes: usize) -> Dims {
    Dims {
        vocab_size: 30,
        embed_dim: 6,
        hidden_dim: 8,
        num_classes: classes,
        steps: 8,
    }
}

fn review(rng: &mut Rng, content: usize, len: usize, label: usize) -> EncodedReview {
    let mut ids = vec![PAD_ID; len - content - 1];
    ids.extend((0..content).map(|_| 3 + rng.below(27) as u32));
    ids.push(EOS_ID);
    EncodedReview::from_ids(ids, label)
}

fn batch_of(set: &[EncodedReview]) -> ReviewBatch {
    ReviewBatch::from_reviews(set, (0..set.len()).collect()).unwrap()
}

#[test]
fn all_pad_slice_from_zero_state_is_one_half() {
    let p: Params<f64> = init_params(Arch::ModifiedRnn, dims(4), &mut Rng::new(1)).unwrap();
    let set = vec![EncodedReview::from_ids(vec![PAD_ID; 8], 0)];
    let slice = &batch_of(&set).slices(8)[0];
    let t = forward(
        &p,
        slice,
        &Matrix::zeros(1, 8),
        &Hyper::default(),
        Mode::Eval,
    )
    .unwrap();
    assert!(t.hidden[0].as_slice().iter().all(|&h| h == 0.5));
}

#[test]
fn saturated_update_gate_carries_state_through_exactly() {
    let mut rng = Rng::new(2);
    let mut p: Params<f64> = init_params(Arch::Gru, dims(5), &mut rng).unwrap();
    p.embed.map_inplace(|v| v.abs() + 0.5);
    if let Cell::Gru { w_z, u_z, .. } = &mut p.weights.cell {
        w_z.fill(1e4);
        u_z.fill(0.0);
    }
    let set: Vec<_> = (0..3).map(|i| review(&mut rng, 7, 8, i)).collect();
    let slice = &batch_of(&set).slices(8)[0];
    let h_in = seeded_uniform(3, 8, -1.0, 1.0, &mut rng).unwrap();
    let t = forward(&p, slice, &h_in, &Hyper::default(), Mode::Eval).unwrap();
    assert!(t
        .gru
        .iter()
        .all(|c| c.z.as_slice().iter().all(|&z| z == 1.0)));
    assert_eq!(t.h_out(), &h_in);
}

#[test]
fn keep_prob_one_makes_train_and_eval_identical() {
    let mut rng = Rng::new(3);
    for arch in Arch::ALL {
        let p: Params<f64> = init_params(arch, dims(5), &mut rng).unwrap();
        let set: Vec<_> = (0..4).map(|i| review(&mut rng, 20, 24, i)).collect();
        let b = batch_of(&set);
        let hyper = Hyper::default();
        let train = forward_batch(&p, &b, &hyper, Some(&mut Rng::new(9))).unwrap();
        let eval = forward_batch(&p, &b, &hyper, None).unwrap();
        assert_eq!(train, eval);
        // With dropout the two modes differ, and masks are recorded.
        let drop = Hyper {
            keep_prob: 0.5,
            ..hyper
        };
        let train = forward_batch(&p, &b, &drop, Some(&mut Rng::new(9))).unwrap();
        assert!(train
            .iter()
            .flat_map(|t| &t.points)
            .all(|pt| pt.mask.is_some()));
        assert_ne!(train, eval);
    }
}

#[test]
fn uniform_predictor_loss_is_log_classes() {
    let mut rng = Rng::new(4);
    for classes in [4, 5] {
        for arch in Arch::ALL {
            let mut p: Params<f64> = init_params(arch, dims(classes), &mut rng).unwrap();
            p.weights.w_s.fill(0.0);
            let set: Vec<_> = (0..6)
                .map(|i| review(&mut rng, 12, 16, i % classes))
                .collect();
            let b = batch_of(&set);
            let traces = forward_batch(&p, &b, &Hyper::default(), None).unwrap();
            let loss = compute_loss(&traces, &b.labels, &p, &Hyper::default()).unwrap();
            assert!(
                (loss - (classes as f64).ln()).abs() < 1e-12,
                "{arch} C={classes}: {loss}"
            );
        }
    }
}

#[test]
fn one_review_of_88_tokens_has_11_points() {
    let mut rng = Rng::new(5);
    let p: Params<f64> = init_params(Arch::ModifiedRnn, dims(5), &mut rng).unwrap();
    let set = vec![review(&mut rng, 80, 88, 2)];
    let traces = forward_batch(&p, &batch_of(&set), &Hyper::default(), None).unwrap();
    assert_eq!(traces.len(), 11);
    assert_eq!(active_points(&traces), 11);

    let g: Params<f64> = init_params(Arch::Gru, dims(5), &mut rng).unwrap();
    let traces = forward_batch(&g, &batch_of(&set), &Hyper::default(), None).unwrap();
    assert_eq!(active_points(&traces), 88);
    // Masking drops the points whose inputs are entirely padding.
    let masked = Hyper {
        mask_pad_slices: true,
        ..Hyper::default()
    };
    let traces = forward_batch(&g, &batch_of(&set), &masked, None).unwrap();
    assert_eq!(active_points(&traces), 81);
    let traces = forward_batch(&p, &batch_of(&set), &masked, None).unwrap();
    assert_eq!(active_points(&traces), 11);
    let short = vec![review(&mut rng, 10, 88, 2)];
    let traces = forward_batch(&p, &batch_of(&short), &masked, None).unwrap();
    assert_eq!(active_points(&traces), 2);
}

#[test]
fn l2_adds_half_lambda_squared_norm() {
    let mut rng = Rng::new(6);
    for arch in Arch::ALL {
        let p: Params<f64> = init_params(arch, dims(5), &mut rng).unwrap();
        let set: Vec<_> = (0..3).map(|i| review(&mut rng, 14, 16, i)).collect();
        let b = batch_of(&set);
        let traces = forward_batch(&p, &b, &Hyper::default(), None).unwrap();
        let plain = compute_loss(&traces, &b.labels, &p, &Hyper::default()).unwrap();
        let reg = compute_loss(
            &traces,
            &b.labels,
            &p,
            &Hyper {
                l2: 0.009,
                ..Hyper::default()
            },
        )
        .unwrap();
        let norm: f64 = p
            .weights
            .tensors()
            .iter()
            .filter(|t| t.regularized)
            .map(|t| t.value.sq_norm())
            .sum();
        assert!((reg - plain - 0.0045 * norm).abs() < 1e-12);
    }
}

#[test]
fn pad_row_never_receives_gradient() {
    let mut rng = Rng::new(7);
    for arch in Arch::ALL {
        let p: Params<f64> = init_params(arch, dims(5), &mut rng).unwrap();
        let set: Vec<_> = (0..3).map(|i| review(&mut rng, 5, 16, i)).collect();
        let b = batch_of(&set);
        let hyper = Hyper {
            l2: 0.01,
            ..Hyper::default()
        };
        let traces = forward_batch(&p, &b, &hyper, None).unwrap();
        let g = backward(&traces, &b.labels, &p, &hyper).unwrap();
        assert!(!g.embed.contains_key(&PAD_ID));
        assert!(g.embed.keys().all(|&id| b.ids.contains(&id)));
    }
}

#[test]
fn duplicating_a_review_leaves_gradients_unchanged() {
    let mut rng = Rng::new(8);
    for arch in Arch::ALL {
        let p: Params<f64> = init_params(arch, dims(5), &mut rng).unwrap();
        let one = vec![review(&mut rng, 14, 16, 1)];
        let two = vec![one[0].clone(), one[0].clone()];
        let grads = |set: &[EncodedReview]| {
            let b = batch_of(set);
            let traces = forward_batch(&p, &b, &Hyper::default(), None).unwrap();
            backward(&traces, &b.labels, &p, &Hyper::default())
                .unwrap()
                .dense(&p.dims)
        };
        for ((name, a), (_, b)) in grads(&one).into_iter().zip(grads(&two)) {
            let diff = a.sub(&b).unwrap().max_abs();
            assert!(
                diff <= 1e-14 * (1.0 + a.max_abs()),
                "{arch} {name}: {diff:e}"
            );
        }
    }
}

#[test]
fn prediction_rows_sum_to_one() {
    let mut rng = Rng::new(9);
    for arch in Arch::ALL {
        let p: Params<f64> = init_params(arch, dims(4), &mut rng).unwrap();
        let set: Vec<_> = (0..5).map(|i| review(&mut rng, 20, 24, i % 4)).collect();
        let hyper = Hyper {
            keep_prob: 0.7,
            ..Hyper::default()
        };
        for t in forward_batch(&p, &batch_of(&set), &hyper, Some(&mut rng.fork())).unwrap() {
            for probs in t.predictions() {
                for r in 0..probs.rows() {
                    let s: f64 = probs.row(r).iter().sum();
                    assert!((s - 1.0).abs() < 1e-9);
                }
            }
        }
    }
}

#[test]
fn leading_padding_is_content_independent() {
    let mut rng = Rng::new(10);
    for arch in Arch::ALL {
        let p: Params<f64> = init_params(arch, dims(5), &mut rng).unwrap();
        let set: Vec<_> = (0..4).map(|i| review(&mut rng, 7, 24, i)).collect();
        let traces = forward_batch(&p, &batch_of(&set), &Hyper::default(), None).unwrap();
        let h = traces[1].h_out();
        for r in 1..4 {
            assert_eq!(h.row(r), h.row(0), "{arch}");
        }
        assert_ne!(traces[2].h_out().row(1), traces[2].h_out().row(0));
    }
}

#[test]
fn gru_state_stays_between_previous_state_and_candidate() {
    let mut rng = Rng::new(11);
    let p: Params<f64> = init_params(Arch::Gru, dims(5), &mut rng).unwrap();
    let set: Vec<_> = (0..6).map(|i| review(&mut rng, 30, 32, i % 5)).collect();
    for t in forward_batch(&p, &batch_of(&set), &Hyper::default(), None).unwrap() {
        for k in 0..t.width {
            let (prev, c, h) = (t.h_before(k), &t.gru[k], &t.hidden[k]);
            for i in 0..h.as_slice().len() {
                let (a, b) = (prev.as_slice()[i], c.cand.as_slice()[i]);
                let v = h.as_slice()[i];
                assert!(a.min(b) <= v && v <= a.max(b));
                assert!(c.z.as_slice()[i] > 0.0 && c.z.as_slice()[i] < 1.0);
                assert!(c.r.as_slice()[i] > 0.0 && c.r.as_slice()[i] < 1.0);
            }
        }
    }
}

#[test]
fn shifting_output_bias_keeps_predictions() {
    let mut rng = Rng::new(12);
    for arch in Arch::ALL {
        let mut p: Params<f64> = init_params(arch, dims(5), &mut rng).unwrap();
        let set: Vec<_> = (0..8).map(|i| review(&mut rng, 20, 24, i % 5)).collect();
        let b = batch_of(&set);
        let before = predict_batch(&p, &b, &Hyper::default()).unwrap();
        p.weights.b2.map_inplace(|v| v + 3.25);
        assert_eq!(predict_batch(&p, &b, &Hyper::default()).unwrap(), before);
    }
}

#[test]
fn small_sgd_step_does_not_increase_batch_loss() {
    let reviews = synth_corpus(20, &PlantSpec::default(), &mut Rng::new(13));
    let data = prepare(&reviews, &PrepareOptions::default(), &mut Rng::new(14))
        .unwrap()
        .data;
    let d = Dims {
        vocab_size: data.vocab.len(),
        embed_dim: 10,
        hidden_dim: 12,
        num_classes: 5,
        steps: 8,
    };
    let batches = plan_epoch(&data.train.reviews, 10, &mut Rng::new(15)).unwrap();
    for arch in Arch::ALL {
        let mut p: Params<f64> = init_params(arch, d, &mut Rng::new(16)).unwrap();
        let hyper = Hyper {
            l2: 0.009,
            ..Hyper::default()
        };
        for b in &batches {
            let traces = forward_batch(&p, b, &hyper, None).unwrap();
            let before = compute_loss(&traces, &b.labels, &p, &hyper).unwrap();
            let g = backward(&traces, &b.labels, &p, &hyper).unwrap();
            sgd_step(&mut p, &g, 1e-4).unwrap();
            let traces = forward_batch(&p, b, &hyper, None).unwrap();
            let after = compute_loss(&traces, &b.labels, &p, &hyper).unwrap();
            assert!(after <= before, "{arch}: {before} -> {after}");
        }
    }
}
