use serde::{Deserialize, Serialize};

use crate::adversarial::{AdaMode, AdversarialNet, ForwardCapture, Part};
use crate::nn::{backward, constant_one_hot, cross_entropy, forward, one_hot, GradBundle};
use crate::numcore::{Matrix, RngState};
use crate::{Error, Result};

/// Domain one-hot encoding: source `[1, 0]`, target `[0, 1]`.
pub const SOURCE_DOMAIN_CLASS: usize = 0;
pub const TARGET_DOMAIN_CLASS: usize = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    /// Weight of the target classification term in `L_c`.
    pub lambda: f64,
    /// Weight of the adversarial gradients (and of the discriminator/classifier updates).
    pub beta: f64,
    /// Weight of the classification gradients into the generators.
    pub gamma_w: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            lambda: 1.0,
            beta: 1.0,
            gamma_w: 1.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if ok(self.lambda) && ok(self.beta) && ok(self.gamma_w) {
            Ok(())
        } else {
            Err(Error::Config(format!("loss weights must be finite and >= 0: {self:?}")))
        }
    }
}

/// Class labels of a paired batch.
#[derive(Clone, Copy, Debug)]
pub struct PairLabels<'a> {
    pub y_s: &'a [u8],
    pub y_t: &'a [u8],
}

/// Loss values of one paired forward pass, with the logit gradients needed for routing.
///
/// All terms are batch means within each domain. `l_cs` and `l_ct` are the unweighted
/// source and target classification losses, `l_c = l_cs + λ·l_ct`.
#[derive(Clone, Debug)]
pub struct AdversarialLosses {
    pub mode: AdaMode,
    pub l_c: f64,
    pub l_cs: f64,
    pub l_ct: f64,
    pub l_d: f64,
    pub l_g: f64,
    capture_id: u64,
    lambda: f64,
    cls_s: Matrix,
    cls_t: Matrix,
    dom_s: Matrix,
    dom_t: Matrix,
    adv_s: Matrix,
    adv_t: Matrix,
}

impl AdversarialLosses {
    /// `(L_c, L_d, L_g)`.
    pub fn faraday(&self) -> (f64, f64, f64) {
        (self.l_c, self.l_d, self.l_g)
    }

    /// `(L_cs, L_ct, L_g)`.
    pub fn dirac(&self) -> (f64, f64, f64) {
        (self.l_cs, self.l_ct, self.l_g)
    }
}

fn losses(cap: &ForwardCapture, labels: PairLabels<'_>, weights: &LossWeights, mode: AdaMode) -> Result<AdversarialLosses> {
    weights.validate()?;
    let (ns, nt) = (cap.d_hat_s.rows(), cap.d_hat_t.rows());
    if labels.y_s.len() != ns || labels.y_t.len() != nt {
        return Err(Error::Shape(format!(
            "labels ({}, {}) for batches ({ns}, {nt})",
            labels.y_s.len(),
            labels.y_t.len()
        )));
    }
    let (l_cs, cls_s) = cross_entropy(&cap.y_hat_s, &one_hot(labels.y_s, 2), 1.0)?;
    let (l_ct, cls_t) = cross_entropy(&cap.y_hat_t, &one_hot(labels.y_t, 2), 1.0)?;
    let d_s = constant_one_hot(ns, SOURCE_DOMAIN_CLASS, 2);
    let d_t = constant_one_hot(nt, TARGET_DOMAIN_CLASS, 2);
    let (ld_s, dom_s) = cross_entropy(&cap.d_hat_s, &d_s, 1.0)?;
    let (ld_t, dom_t) = cross_entropy(&cap.d_hat_t, &d_t, 1.0)?;
    let l_d = ld_s + ld_t;
    let (l_g, adv_s, adv_t) = match mode {
        AdaMode::Faraday => {
            // The complement of a binary one-hot row is the other domain's row.
            let (lg_s, adv_s) = cross_entropy(&cap.d_hat_s, &constant_one_hot(ns, TARGET_DOMAIN_CLASS, 2), 1.0)?;
            let (lg_t, adv_t) = cross_entropy(&cap.d_hat_t, &constant_one_hot(nt, SOURCE_DOMAIN_CLASS, 2), 1.0)?;
            (lg_s + lg_t, adv_s, adv_t)
        }
        AdaMode::Dirac => (l_d, dom_s.clone(), dom_t.clone()),
    };
    Ok(AdversarialLosses {
        mode,
        l_c: l_cs + weights.lambda * l_ct,
        l_cs,
        l_ct,
        l_d,
        l_g,
        capture_id: cap.id,
        lambda: weights.lambda,
        cls_s,
        cls_t,
        dom_s,
        dom_t,
        adv_s,
        adv_t,
    })
}

/// `L_c = CE(ŷ_s, y_s) + λ·CE(ŷ_t, y_t)`, `L_d = CE(d̂_s, d_s) + CE(d̂_t, d_t)`,
/// `L_g = CE(d̂_s, 1 − d_s) + CE(d̂_t, 1 − d_t)`.
pub fn faraday_losses(cap: &ForwardCapture, labels: PairLabels<'_>, weights: &LossWeights) -> Result<AdversarialLosses> {
    losses(cap, labels, weights, AdaMode::Faraday)
}

/// As [`faraday_losses`] but with `L_g = L_d`.
pub fn dirac_losses(cap: &ForwardCapture, labels: PairLabels<'_>, weights: &LossWeights) -> Result<AdversarialLosses> {
    losses(cap, labels, weights, AdaMode::Dirac)
}

/// Gradients for every sub-network, already weighted.
#[derive(Clone, Debug)]
pub struct AdversarialGrads {
    pub gen_source: GradBundle,
    pub gen_target: GradBundle,
    pub shared: GradBundle,
    pub disc: GradBundle,
    pub clf: GradBundle,
}

impl AdversarialGrads {
    pub fn get(&self, p: Part) -> &GradBundle {
        match p {
            Part::GenSource => &self.gen_source,
            Part::GenTarget => &self.gen_target,
            Part::Shared => &self.shared,
            Part::Disc => &self.disc,
            Part::Clf => &self.clf,
        }
    }
}

fn combine(a: f64, x: &Matrix, b: f64, y: &Matrix) -> Result<Matrix> {
    let mut out = x.scale(a);
    out.axpy(b, y)?;
    Ok(out)
}

fn sum_scaled(a: f64, x: &GradBundle, b: f64, y: &GradBundle) -> Result<GradBundle> {
    let mut out = x.clone();
    out.scale(a);
    out.add_scaled(b, y)?;
    Ok(out)
}

/// Weighted gradients for one update.
///
/// * `∇C = β·∂L_c/∂C`, `∇D = β·∂L_d/∂D`
/// * `∇G = β·∂L_g/∂G + γ·∂L_c/∂G`
/// * faraday: `∇G_S = β·∂L_g/∂G_S + γ·∂L_c/∂G_S`, likewise `G_T`
/// * dirac: `∇G_S = β·∂L_g/∂G_S + γ·∂L_cs/∂G_S`, `∇G_T = β·∂L_g/∂G_T + γ·∂L_ct/∂G_T`
///
/// The adversarial signal reaching `G` and below is `L_g` backpropagated through a
/// fixed `D`.
pub fn route_gradients(
    net: &AdversarialNet,
    cap: &ForwardCapture,
    losses: &AdversarialLosses,
    weights: &LossWeights,
    mode: AdaMode,
) -> Result<AdversarialGrads> {
    if losses.mode != mode {
        return Err(Error::Contract(format!(
            "{} losses routed in {} mode",
            losses.mode.name(),
            mode.name()
        )));
    }
    if losses.capture_id != cap.id {
        return Err(Error::Contract("losses were computed from a different forward pass".into()));
    }
    if losses.lambda != weights.lambda {
        return Err(Error::Contract("losses were computed with a different lambda".into()));
    }
    let LossWeights { lambda, beta, gamma_w } = *weights;

    let c_s = backward(&net.clf, &cap.clf_s, &losses.cls_s, true)?;
    let c_t = backward(&net.clf, &cap.clf_t, &losses.cls_t, true)?;
    let clf = sum_scaled(beta, &c_s.grads, beta * lambda, &c_t.grads)?;
    let gc_s = c_s.input_grad.expect("requested");
    let gc_t = c_t.input_grad.expect("requested");

    let need_adv_input = mode == AdaMode::Dirac;
    let d_s = backward(&net.disc, &cap.disc_s, &losses.dom_s, need_adv_input)?;
    let d_t = backward(&net.disc, &cap.disc_t, &losses.dom_t, need_adv_input)?;
    let disc = sum_scaled(beta, &d_s.grads, beta, &d_t.grads)?;
    let (adv_s, adv_t) = match mode {
        AdaMode::Dirac => (d_s.input_grad.expect("requested"), d_t.input_grad.expect("requested")),
        AdaMode::Faraday => (
            backward(&net.disc, &cap.disc_s, &losses.adv_s, true)?.input_grad.expect("requested"),
            backward(&net.disc, &cap.disc_t, &losses.adv_t, true)?.input_grad.expect("requested"),
        ),
    };

    let up_s = combine(beta, &adv_s, gamma_w, &gc_s)?;
    let up_t = combine(beta, &adv_t, gamma_w * lambda, &gc_t)?;
    let g_s = backward(&net.shared, &cap.shared_s, &up_s, true)?;
    let g_t = backward(&net.shared, &cap.shared_t, &up_t, true)?;
    let shared = sum_scaled(1.0, &g_s.grads, 1.0, &g_t.grads)?;

    let into_gs = g_s.input_grad.expect("requested");
    let into_gt = match mode {
        AdaMode::Dirac if lambda != 1.0 => {
            let own = combine(beta, &adv_t, gamma_w, &gc_t)?;
            backward(&net.shared, &cap.shared_t, &own, true)?.input_grad.expect("requested")
        }
        _ => g_t.input_grad.expect("requested"),
    };
    let gen_source = backward(&net.gen_source, &cap.gen_source, &into_gs, false)?.grads;
    let gen_target = backward(&net.gen_target, &cap.gen_target, &into_gt, false)?.grads;
    Ok(AdversarialGrads {
        gen_source,
        gen_target,
        shared,
        disc,
        clf,
    })
}

/// One discriminator-only Adam step on fixed shared representations,
/// `∇D = β·∂L_d/∂D`. Returns `L_d` before the step.
pub fn discriminator_update(
    net: &mut AdversarialNet,
    x_gs: &Matrix,
    x_gt: &Matrix,
    weights: &LossWeights,
    rng: &mut RngState,
) -> Result<f64> {
    let (d_hat_s, cache_s) = forward(&net.disc, x_gs, rng)?;
    let (d_hat_t, cache_t) = forward(&net.disc, x_gt, rng)?;
    let (ld_s, g_s) = cross_entropy(&d_hat_s, &constant_one_hot(x_gs.rows(), SOURCE_DOMAIN_CLASS, 2), 1.0)?;
    let (ld_t, g_t) = cross_entropy(&d_hat_t, &constant_one_hot(x_gt.rows(), TARGET_DOMAIN_CLASS, 2), 1.0)?;
    let b_s = backward(&net.disc, &cache_s, &g_s, false)?;
    let b_t = backward(&net.disc, &cache_t, &g_t, false)?;
    let grads = sum_scaled(weights.beta, &b_s.grads, weights.beta, &b_t.grads)?;
    net.apply_one(Part::Disc, &grads)?;
    Ok(ld_s + ld_t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversarial::{forward_pair, AdversarialArch};
    use crate::nn::PROB_CLAMP;
    use crate::numcore::RngState;

    fn arch() -> AdversarialArch {
        AdversarialArch {
            input_dim: 6,
            private: vec![5, 4],
            shared: 4,
            head_hidden: 3,
        }
    }

    struct Fixture {
        net: AdversarialNet,
        xs: Matrix,
        xt: Matrix,
        ys: Vec<u8>,
        yt: Vec<u8>,
    }

    fn fixture(seed: u64, ns: usize, nt: usize) -> Fixture {
        let mut rng = RngState::new(seed);
        let mut net = AdversarialNet::init(&arch(), &mut rng).unwrap();
        // Non-zero biases keep pre-activations off the ReLU kink at exactly zero.
        for p in Part::ALL {
            let v: Vec<f64> = net.part(p).params_flat().iter().map(|w| w + 0.1 * rng.next_normal()).collect();
            net.part_mut(p).set_params_flat(&v).unwrap();
        }
        let mut mat = |n: usize| Matrix::from_vec(n, 6, (0..n * 6).map(|_| rng.next_normal()).collect()).unwrap();
        let xs = mat(ns);
        let xt = mat(nt);
        let ys = (0..ns).map(|i| (i % 2) as u8).collect();
        let yt = (0..nt).map(|i| ((i / 2) % 2) as u8).collect();
        Fixture { net, xs, xt, ys, yt }
    }

    impl Fixture {
        fn labels(&self) -> PairLabels<'_> {
            PairLabels { y_s: &self.ys, y_t: &self.yt }
        }

        fn eval(&self, net: &AdversarialNet, w: &LossWeights, mode: AdaMode) -> (ForwardCapture, AdversarialLosses) {
            let cap = forward_pair(net, &self.xs, &self.xt, &mut RngState::new(0)).unwrap();
            let l = match mode {
                AdaMode::Faraday => faraday_losses(&cap, self.labels(), w).unwrap(),
                AdaMode::Dirac => dirac_losses(&cap, self.labels(), w).unwrap(),
            };
            (cap, l)
        }

        fn grads(&self, w: &LossWeights, mode: AdaMode) -> AdversarialGrads {
            let (cap, l) = self.eval(&self.net, w, mode);
            route_gradients(&self.net, &cap, &l, w, mode).unwrap()
        }
    }

    /// Central differences with ε = 1e-6. Differences below 1e-9 are under the
    /// resolution of the probe itself (roundoff ≈ machine ε·|L|/ε), hence the
    /// denominator floor.
    fn fd_check(f: &Fixture, part: Part, analytic: &GradBundle, objective: impl Fn(&AdversarialLosses) -> f64, mode: AdaMode, w: &LossWeights) -> f64 {
        let eps = 1e-6;
        let base = f.net.part(part).params_flat();
        let g = analytic.flat();
        let mut worst: f64 = 0.0;
        for k in 0..base.len() {
            let eval_at = |delta: f64| {
                let mut net = f.net.clone();
                let mut v = base.clone();
                v[k] += delta;
                net.part_mut(part).set_params_flat(&v).unwrap();
                objective(&f.eval(&net, w, mode).1)
            };
            let numeric = (eval_at(eps) - eval_at(-eps)) / (2.0 * eps);
            let denom = numeric.abs().max(g[k].abs()).max(1e-5);
            worst = worst.max((numeric - g[k]).abs() / denom);
        }
        worst
    }

    /// Each sub-network's routed gradient against the scalar objective it descends.
    fn check_all(mode: AdaMode, w: LossWeights, f: &Fixture) {
        let g = f.grads(&w, mode);
        let LossWeights { beta, gamma_w, lambda } = w;
        type Obj = Box<dyn Fn(&AdversarialLosses) -> f64>;
        let cases: Vec<(Part, Obj)> = vec![
            (Part::Clf, Box::new(move |l| beta * l.l_c)),
            (Part::Disc, Box::new(move |l| beta * l.l_d)),
            (Part::Shared, Box::new(move |l| beta * l.l_g + gamma_w * l.l_c)),
            (
                Part::GenSource,
                match mode {
                    AdaMode::Faraday => Box::new(move |l| beta * l.l_g + gamma_w * l.l_c),
                    AdaMode::Dirac => Box::new(move |l| beta * l.l_g + gamma_w * l.l_cs),
                },
            ),
            (
                Part::GenTarget,
                match mode {
                    AdaMode::Faraday => Box::new(move |l| beta * l.l_g + gamma_w * (l.l_cs + lambda * l.l_ct)),
                    AdaMode::Dirac => Box::new(move |l| beta * l.l_g + gamma_w * l.l_ct),
                },
            ),
        ];
        for (part, obj) in cases {
            let err = fd_check(f, part, g.get(part), obj, mode, &w);
            assert!(err < 1e-4, "{} {}: relative error {err}", mode.name(), part.name());
        }
    }

    #[test]
    fn discriminator_update_touches_only_the_discriminator() {
        let f = fixture(26, 4, 3);
        let mut net = f.net.clone().with_optimizer(crate::nn::AdamConfig::new(1e-2, 0.5));
        let (cap, l) = f.eval(&net, &LossWeights::default(), AdaMode::Dirac);
        let before: Vec<Vec<f64>> = Part::ALL.iter().map(|&p| net.part(p).params_flat()).collect();
        let ld = discriminator_update(&mut net, &cap.x_gs, &cap.x_gt, &LossWeights::default(), &mut RngState::new(0)).unwrap();
        assert_eq!(ld.to_bits(), l.l_d.to_bits());
        for (i, &p) in Part::ALL.iter().enumerate() {
            let same = net.part(p).params_flat() == before[i];
            assert_eq!(same, p != Part::Disc, "{}", p.name());
        }
        // The step matches the discriminator gradient of the full routing.
        let g = route_gradients(&f.net, &cap, &l, &LossWeights::default(), AdaMode::Dirac).unwrap();
        let mut manual = f.net.clone().with_optimizer(crate::nn::AdamConfig::new(1e-2, 0.5));
        manual.apply_one(Part::Disc, &g.disc).unwrap();
        assert_eq!(manual.disc.params_flat(), net.disc.params_flat());
    }

    const ODD: LossWeights = LossWeights { lambda: 0.7, beta: 0.8, gamma_w: 1.3 };

    #[test]
    fn faraday_routing_matches_finite_differences() {
        check_all(AdaMode::Faraday, ODD, &fixture(11, 5, 3));
        check_all(AdaMode::Faraday, LossWeights::default(), &fixture(12, 4, 4));
    }

    #[test]
    fn dirac_routing_matches_finite_differences() {
        check_all(AdaMode::Dirac, ODD, &fixture(13, 5, 3));
        check_all(AdaMode::Dirac, LossWeights::default(), &fixture(14, 4, 4));
    }

    fn uniform_disc(net: &mut AdversarialNet) {
        let d = &mut net.disc;
        let n = d.param_count();
        let last = d.layers().last().unwrap().weights.len() + 2;
        let mut p = d.params_flat();
        p[n - last..].iter_mut().for_each(|v| *v = 0.0);
        d.set_params_flat(&p).unwrap();
    }

    #[test]
    fn uniform_discriminator_costs_two_ln2() {
        let mut f = fixture(15, 4, 3);
        uniform_disc(&mut f.net);
        let (_, l) = f.eval(&f.net, &LossWeights::default(), AdaMode::Faraday);
        let two_ln2 = 2.0 * std::f64::consts::LN_2;
        assert!((l.l_d - two_ln2).abs() < 1e-12);
        assert!((l.l_g - two_ln2).abs() < 1e-12);
    }

    #[test]
    fn perfect_discriminator_clamp_arithmetic() {
        let f = fixture(16, 3, 2);
        let (mut cap, _) = f.eval(&f.net, &LossWeights::default(), AdaMode::Faraday);
        cap.d_hat_s = constant_one_hot(3, 0, 2);
        cap.d_hat_t = constant_one_hot(2, 1, 2);
        let l = faraday_losses(&cap, f.labels(), &LossWeights::default()).unwrap();
        assert!(l.l_d.abs() < 1e-12);
        assert!((l.l_g - 2.0 * PROB_CLAMP.ln().abs()).abs() < 1e-9);
    }

    #[test]
    fn faraday_complement_identity_per_sample() {
        let mut rng = RngState::new(17);
        for seed in 0..100 {
            let f = fixture(seed, 1, 1);
            let (cap, l) = f.eval(&f.net, &LossWeights::default(), AdaMode::Faraday);
            let _ = rng.next_u64();
            let want = -(cap.d_hat_s.get(0, 0).ln() + cap.d_hat_s.get(0, 1).ln())
                - (cap.d_hat_t.get(0, 0).ln() + cap.d_hat_t.get(0, 1).ln());
            assert!((l.l_d + l.l_g - want).abs() < 1e-12);
        }
    }

    #[test]
    fn dirac_generator_loss_is_discriminator_loss() {
        let f = fixture(18, 5, 2);
        let (cap, far) = f.eval(&f.net, &LossWeights::default(), AdaMode::Faraday);
        let dir = dirac_losses(&cap, f.labels(), &LossWeights::default()).unwrap();
        assert_eq!(dir.l_g.to_bits(), dir.l_d.to_bits());
        assert_eq!(dir.l_g.to_bits(), far.l_d.to_bits());
        let no_target = LossWeights { lambda: 0.0, ..LossWeights::default() };
        assert_eq!(dirac_losses(&cap, f.labels(), &no_target).unwrap().l_c, dir.l_cs);
        assert!((dir.l_c - far.l_c).abs() < 1e-12);
    }

    #[test]
    fn swapped_domain_encoding_is_symmetric() {
        let f = fixture(19, 4, 4);
        let (cap, l) = f.eval(&f.net, &LossWeights::default(), AdaMode::Faraday);
        let swap = |m: &Matrix| Matrix::from_vec(m.rows(), 2, (0..m.rows()).flat_map(|r| [m.get(r, 1), m.get(r, 0)]).collect()).unwrap();
        let mut swapped = cap.clone();
        swapped.d_hat_s = swap(&cap.d_hat_s);
        swapped.d_hat_t = swap(&cap.d_hat_t);
        let ls = faraday_losses(&swapped, f.labels(), &LossWeights::default()).unwrap();
        // Relabelling domains and the discriminator outputs together leaves the losses unchanged.
        assert!((ls.l_g - l.l_d).abs() < 1e-12);
        assert!((ls.l_d - l.l_g).abs() < 1e-12);
    }

    #[test]
    fn zero_beta_leaves_only_classification() {
        let f = fixture(20, 4, 3);
        let w = LossWeights { beta: 0.0, ..ODD };
        let g = f.grads(&w, AdaMode::Faraday);
        assert!(g.disc.is_zero());
        assert!(g.clf.is_zero());
        for part in [Part::GenSource, Part::GenTarget, Part::Shared] {
            let err = fd_check(&f, part, g.get(part), |l| ODD.gamma_w * l.l_c, AdaMode::Faraday, &w);
            assert!(err < 1e-4, "{}: {err}", part.name());
        }
    }

    #[test]
    fn zero_gamma_keeps_only_adversarial_generator_terms() {
        let f = fixture(21, 4, 3);
        let w = LossWeights { gamma_w: 0.0, ..ODD };
        let g = f.grads(&w, AdaMode::Faraday);
        for part in [Part::GenSource, Part::GenTarget, Part::Shared] {
            let err = fd_check(&f, part, g.get(part), |l| ODD.beta * l.l_g, AdaMode::Faraday, &w);
            assert!(err < 1e-4, "{}: {err}", part.name());
        }
        // The classifier still follows β·∂L_c/∂C.
        let full = f.grads(&ODD, AdaMode::Faraday);
        assert_eq!(g.clf, full.clf);
        assert!(!g.clf.is_zero());
    }

    #[test]
    fn dirac_target_labels_never_reach_source_generator() {
        let f = fixture(22, 4, 3);
        let mut flipped = fixture(22, 4, 3);
        flipped.yt.iter_mut().for_each(|y| *y = 1 - *y);
        let a = f.grads(&ODD, AdaMode::Dirac);
        let b = flipped.grads(&ODD, AdaMode::Dirac);
        assert_eq!(a.gen_source, b.gen_source);
        assert_ne!(a.gen_target, b.gen_target);
        // The shared generator sees both domains' classification losses.
        assert_ne!(a.shared, b.shared);
    }

    #[test]
    fn gradient_isolation_between_heads() {
        let f = fixture(23, 4, 3);
        let base = f.grads(&ODD, AdaMode::Faraday);
        let mut net = f.net.clone();
        let p: Vec<f64> = net.clf.params_flat().iter().map(|v| v + 0.3).collect();
        net.clf.set_params_flat(&p).unwrap();
        let (cap, l) = f.eval(&net, &ODD, AdaMode::Faraday);
        let moved = route_gradients(&net, &cap, &l, &ODD, AdaMode::Faraday).unwrap();
        assert_eq!(moved.disc, base.disc);
        let mut net = f.net.clone();
        let p: Vec<f64> = net.disc.params_flat().iter().map(|v| v - 0.2).collect();
        net.disc.set_params_flat(&p).unwrap();
        let (cap, l) = f.eval(&net, &ODD, AdaMode::Faraday);
        let moved = route_gradients(&net, &cap, &l, &ODD, AdaMode::Faraday).unwrap();
        assert_eq!(moved.clf, base.clf);
    }

    #[test]
    fn fooled_discriminator_balances_domain_and_generator_pressure() {
        let mut f = fixture(24, 3, 3);
        uniform_disc(&mut f.net);
        let (_, l) = f.eval(&f.net, &LossWeights::default(), AdaMode::Faraday);
        // At d̂ = [0.5, 0.5] the logit gradients of L_g exactly oppose those of L_d.
        for (a, b) in l.adv_s.as_slice().iter().zip(l.dom_s.as_slice()).chain(l.adv_t.as_slice().iter().zip(l.dom_t.as_slice())) {
            assert!((a + b).abs() < 1e-12);
        }
    }

    #[test]
    fn mismatched_inputs_are_contract_errors() {
        let f = fixture(25, 2, 2);
        let w = LossWeights::default();
        let (cap, far) = f.eval(&f.net, &w, AdaMode::Faraday);
        assert!(matches!(route_gradients(&f.net, &cap, &far, &w, AdaMode::Dirac), Err(Error::Contract(_))));
        let (other, _) = f.eval(&f.net, &w, AdaMode::Faraday);
        assert!(matches!(route_gradients(&f.net, &other, &far, &w, AdaMode::Faraday), Err(Error::Contract(_))));
        let w2 = LossWeights { lambda: 0.5, ..w };
        assert!(matches!(route_gradients(&f.net, &cap, &far, &w2, AdaMode::Faraday), Err(Error::Contract(_))));
        let bad = LossWeights { beta: -1.0, ..w };
        assert!(faraday_losses(&cap, f.labels(), &bad).is_err());
    }
}
