//! Distinguishability bounds for linear optical stacks.
//!
//! For a stack collapsing to a linear map M with all singular values ≤ 1,
//! the detector-plane component distance between two inputs ψ₀, φ₀ obeys
//! the chain (writing ψ = ψ_out = Mψ₀, φ = φ_out = Mφ₀ and summing over
//! real/imaginary components p of every pixel j):
//!
//! ```text
//! Σ_{j,p} |ψ(j,p)² − φ(j,p)²|
//!   = Σ_{j,p} |ψ−φ|(j,p) · |ψ+φ|(j,p)      (difference of squares)
//!   ≤ ‖ψ−φ‖₂ ‖ψ+φ‖₂                        (Cauchy–Schwarz)
//!   = ‖M(ψ₀−φ₀)‖₂ ‖M(ψ₀+φ₀)‖₂              (linearity)
//!   ≤ ‖ψ₀−φ₀‖₂ ‖ψ₀+φ₀‖₂                    (contraction)
//!   ≤ ‖ψ₀−φ₀‖₂ (‖ψ₀‖₂ + ‖φ₀‖₂)             (triangle)
//! ```
//!
//! so unit-norm inputs at L² distance d can never produce detector
//! component patterns further than 2d apart in L¹ — no matter how many
//! layers the stack has. [`bound_chain`] evaluates every line of this chain
//! on concrete inputs and reports the slack of each step; [`pdp_scan`]
//! turns it into a detectability experiment against readout noise.

use crate::classify::{region_readout, DetectorRegions};
use crate::error::Result;
use crate::exec;
use crate::field::AmplitudeField;
use crate::optics::OpticalStack;
use crate::rng::derive_seed;

const TAG_PDP: u64 = 0x504450;

/// Every line of the distinguishability chain evaluated on one input pair,
/// plus per-step slacks. Quantities appear in chain order; each one upper
/// bounds the previous.
#[derive(Debug, Clone)]
pub struct BoundReport {
    /// Σ |ψ(j,p)² − φ(j,p)²| over output components: the left-hand side.
    pub tvd: f64,
    /// Σ |ψ−φ|(j,p)·|ψ+φ|(j,p): same value by difference of squares.
    pub component_product: f64,
    /// ‖ψ−φ‖₂‖ψ+φ‖₂ at the output plane.
    pub cauchy_schwarz_rhs: f64,
    /// ‖M(ψ₀−φ₀)‖₂‖M(ψ₀+φ₀)‖₂, evaluated by forwarding the difference and
    /// sum fields themselves; equals the previous line up to roundoff.
    pub linearity_rhs: f64,
    /// ‖ψ₀−φ₀‖₂‖ψ₀+φ₀‖₂ at the input plane.
    pub contraction_rhs: f64,
    /// ‖ψ₀−φ₀‖₂(‖ψ₀‖₂+‖φ₀‖₂).
    pub triangle_rhs: f64,
    /// 2‖ψ₀−φ₀‖₂ when both inputs are unit-norm (within 1e-12), else None.
    pub normalized_bound: Option<f64>,
    /// Consecutive differences along the chain (5 entries); non-negative up
    /// to floating-point tolerance −1e-12 × the larger side.
    pub slack_per_line: Vec<f64>,
}

impl BoundReport {
    /// The chain quantities in order, starting with the bounded value.
    pub fn chain(&self) -> [f64; 6] {
        [
            self.tvd,
            self.component_product,
            self.cauchy_schwarz_rhs,
            self.linearity_rhs,
            self.contraction_rhs,
            self.triangle_rhs,
        ]
    }

    /// True when every slack is ≥ −1e-12 × the magnitude of its larger side.
    pub fn holds(&self) -> bool {
        let chain = self.chain();
        self.slack_per_line
            .iter()
            .enumerate()
            .all(|(i, s)| *s >= -1e-12 * chain[i + 1].abs().max(chain[i].abs()))
    }
}

/// Componentwise |u|·|v| sum over real and imaginary parts.
fn component_product_sum(u: &AmplitudeField, v: &AmplitudeField) -> f64 {
    u.pixels()
        .iter()
        .zip(v.pixels())
        .map(|(a, b)| a.re.abs() * b.re.abs() + a.im.abs() * b.im.abs())
        .sum()
}

/// Evaluate the full distinguishability chain for one stack and input pair.
pub fn bound_chain(
    stack: &OpticalStack,
    psi0: &AmplitudeField,
    phi0: &AmplitudeField,
) -> Result<BoundReport> {
    let psi_out = stack.forward(psi0)?;
    let phi_out = stack.forward(phi0)?;

    let out_diff = psi_out.sub(&phi_out)?;
    let out_sum = psi_out.add(&phi_out)?;
    let tvd = psi_out.tvd_component(&phi_out)?;
    let component_product = component_product_sum(&out_diff, &out_sum);
    let cauchy_schwarz_rhs = out_diff.l2_norm() * out_sum.l2_norm();

    let in_diff = psi0.sub(phi0)?;
    let in_sum = psi0.add(phi0)?;
    let linearity_rhs =
        stack.forward(&in_diff)?.l2_norm() * stack.forward(&in_sum)?.l2_norm();
    let contraction_rhs = in_diff.l2_norm() * in_sum.l2_norm();

    let norm_psi0 = psi0.l2_norm();
    let norm_phi0 = phi0.l2_norm();
    let triangle_rhs = in_diff.l2_norm() * (norm_psi0 + norm_phi0);

    let normalized_bound = if (norm_psi0 - 1.0).abs() <= 1e-12 && (norm_phi0 - 1.0).abs() <= 1e-12
    {
        Some(2.0 * in_diff.l2_norm())
    } else {
        None
    };

    let chain = [
        tvd,
        component_product,
        cauchy_schwarz_rhs,
        linearity_rhs,
        contraction_rhs,
        triangle_rhs,
    ];
    let slack_per_line = chain.windows(2).map(|w| w[1] - w[0]).collect();

    Ok(BoundReport {
        tvd,
        component_product,
        cauchy_schwarz_rhs,
        linearity_rhs,
        contraction_rhs,
        triangle_rhs,
        normalized_bound,
        slack_per_line,
    })
}

/// Direct check of the Cauchy–Schwarz step on two fields:
/// lhs = Σ_{j,p}|u(j,p)||v(j,p)|, rhs = ‖u‖₂‖v‖₂, slack = rhs − lhs ≥ 0.
pub fn cauchy_schwarz_check(
    u: &AmplitudeField,
    v: &AmplitudeField,
) -> Result<(f64, f64, f64)> {
    // Reuse sub() purely for its shape validation.
    u.sub(v)?;
    let lhs = component_product_sum(u, v);
    let rhs = u.l2_norm() * v.l2_norm();
    Ok((lhs, rhs, rhs - lhs))
}

/// Norm bookkeeping for the contraction step on difference and sum fields.
#[derive(Debug, Clone, Copy)]
pub struct ContractionStepCheck {
    /// (‖ψ₀−φ₀‖₂, ‖ψ₀+φ₀‖₂)
    pub pre_norms: [f64; 2],
    /// (‖M(ψ₀−φ₀)‖₂, ‖M(ψ₀+φ₀)‖₂)
    pub post_norms: [f64; 2],
    /// pre − post for each; ≥ −1e-12 × pre for a passive stack.
    pub slacks: [f64; 2],
}

impl ContractionStepCheck {
    pub fn holds(&self) -> bool {
        self.slacks
            .iter()
            .zip(&self.pre_norms)
            .all(|(s, pre)| *s >= -1e-12 * pre.max(1.0))
    }
}

/// Verify that the stack does not increase the norm of the difference and
/// sum fields of a concrete input pair.
pub fn contraction_step_check(
    stack: &OpticalStack,
    psi0: &AmplitudeField,
    phi0: &AmplitudeField,
) -> Result<ContractionStepCheck> {
    let diff = psi0.sub(phi0)?;
    let sum = psi0.add(phi0)?;
    let pre = [diff.l2_norm(), sum.l2_norm()];
    let post = [
        stack.forward(&diff)?.l2_norm(),
        stack.forward(&sum)?.l2_norm(),
    ];
    Ok(ContractionStepCheck {
        pre_norms: pre,
        post_norms: post,
        slacks: [pre[0] - post[0], pre[1] - post[1]],
    })
}

/// One row of a perturbation-detectability scan.
#[derive(Debug, Clone, Copy)]
pub struct PdpPoint {
    pub epsilon: f64,
    /// ‖ψ₀ − φ₀‖₂ after normalizing the perturbed input.
    pub input_l2_distance: f64,
    /// Output-plane component distance (chain left-hand side).
    pub tvd: f64,
    /// The chain's final bound for this pair (2 × input distance).
    pub bound: f64,
    /// Fraction of noisy trials in which some region readout pair differed
    /// by more than its noise floor.
    pub detect_fraction: f64,
    /// detect_fraction > 0.5.
    pub detectable: bool,
}

/// Scan perturbation strength ε: for each value, compare the base input
/// ψ₀ with φ₀ = normalize(ψ₀ + ε·direction), evaluate the bound chain, and
/// estimate detectability under noisy region readout.
///
/// A trial draws independent readouts for both fields and counts as a
/// detection when any region's readouts differ by more than
/// 2·noise_sigma·√(region pixels) — twice the standard deviation of a
/// single noisy region sum. With noise_sigma = 0 the floor is zero, so any
/// nonzero readout difference is detected. Trials use independent
/// deterministic substreams of `seed`, so results do not depend on
/// threading.
///
/// ε = 0 is allowed and compares the base with itself: tvd = 0, not
/// detectable under any noise.
#[allow(clippy::too_many_arguments)]
pub fn pdp_scan(
    stack: &OpticalStack,
    regions: &DetectorRegions,
    base: &AmplitudeField,
    direction: &AmplitudeField,
    epsilons: &[f64],
    noise_sigma: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<PdpPoint>> {
    let psi0 = base.normalized()?;
    let dir = direction.normalized()?;
    let psi_image = stack.forward(&psi0)?.intensity();
    let thresholds: Vec<f64> = regions
        .sizes()
        .iter()
        .map(|&m| 2.0 * noise_sigma * (m as f64).sqrt())
        .collect();

    let mut out = Vec::with_capacity(epsilons.len());
    for (e_idx, &eps) in epsilons.iter().enumerate() {
        if !eps.is_finite() || eps < 0.0 {
            return Err(crate::error::Error::InvalidParameter(format!(
                "perturbation strength must be finite and non-negative, got {eps}"
            )));
        }
        let phi0 = if eps == 0.0 {
            psi0.clone()
        } else {
            psi0.add(&dir.scaled_real(eps))?.normalized()?
        };
        let report = bound_chain(stack, &psi0, &phi0)?;
        let input_l2_distance = psi0.sub(&phi0)?.l2_norm();
        let bound = report
            .normalized_bound
            .unwrap_or(2.0 * input_l2_distance);
        let phi_image = stack.forward(&phi0)?.intensity();

        let hits = exec::try_map(trials, |t| -> Result<bool> {
            let r_psi = region_readout(
                &psi_image,
                regions,
                noise_sigma,
                derive_seed(seed, &[TAG_PDP, e_idx as u64, t as u64, 0]),
            )?;
            let r_phi = region_readout(
                &phi_image,
                regions,
                noise_sigma,
                derive_seed(seed, &[TAG_PDP, e_idx as u64, t as u64, 1]),
            )?;
            Ok(r_psi
                .iter()
                .zip(&r_phi)
                .zip(&thresholds)
                .any(|((a, b), thr)| (a - b).abs() > *thr))
        })?;
        let detect_fraction = if trials == 0 {
            0.0
        } else {
            hits.iter().filter(|h| **h).count() as f64 / trials as f64
        };

        out.push(PdpPoint {
            epsilon: eps,
            input_l2_distance,
            tvd: report.tvd,
            bound,
            detect_fraction,
            detectable: detect_fraction > 0.5,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::EvanescentMode;
    use crate::synth;
    use num_complex::Complex64;

    fn fixture(seed: u64) -> OpticalStack {
        synth::random_stack(8, 2, 2, EvanescentMode::Decay, seed).unwrap()
    }

    #[test]
    fn identical_inputs_collapse_the_chain_to_zero_lhs() {
        let stack = fixture(1);
        let f = synth::random_unit_field(8, stack.pixel_pitch(), 2);
        let r = bound_chain(&stack, &f, &f).unwrap();
        assert_eq!(r.tvd, 0.0);
        assert_eq!(r.component_product, 0.0);
        assert_eq!(r.cauchy_schwarz_rhs, 0.0);
        assert!(r.contraction_rhs == 0.0);
        assert!(r.triangle_rhs == 0.0);
        assert!(r.holds());
    }

    #[test]
    fn unit_inputs_report_twice_their_distance_as_bound() {
        let stack = fixture(3);
        let psi = synth::random_unit_field(8, stack.pixel_pitch(), 4);
        let phi = synth::random_unit_field(8, stack.pixel_pitch(), 5);
        let r = bound_chain(&stack, &psi, &phi).unwrap();
        let d = psi.sub(&phi).unwrap().l2_norm();
        let bound = r.normalized_bound.expect("unit-norm inputs");
        assert!((bound - 2.0 * d).abs() <= 1e-12 * bound);
        // Triangle line equals the normalized bound for unit inputs.
        assert!((r.triangle_rhs - bound).abs() <= 1e-12 * bound);
        assert!(r.holds());
    }

    #[test]
    fn random_triples_keep_every_slack_nonnegative() {
        for seed in 0..20u64 {
            let stack = fixture(100 + seed);
            let psi = synth::random_field(8, stack.pixel_pitch(), 200 + seed);
            let phi = synth::random_field(8, stack.pixel_pitch(), 300 + seed);
            let r = bound_chain(&stack, &psi, &phi).unwrap();
            assert!(r.holds(), "seed {seed}: {:?}", r.slack_per_line);
            assert!(r.normalized_bound.is_none());
        }
    }

    #[test]
    fn proportional_inputs_make_cauchy_schwarz_tight() {
        // φ₀ = c·ψ₀ (real c) keeps output difference and sum proportional
        // componentwise, so the Cauchy–Schwarz line is an equality.
        let stack = fixture(7);
        let psi = synth::random_unit_field(8, stack.pixel_pitch(), 8);
        let phi = psi.scaled_real(0.25);
        let r = bound_chain(&stack, &psi, &phi).unwrap();
        let magnitude = r.cauchy_schwarz_rhs.max(r.component_product);
        assert!(
            r.slack_per_line[1].abs() <= 1e-10 * magnitude,
            "slack {} vs magnitude {magnitude}",
            r.slack_per_line[1]
        );
    }

    #[test]
    fn cauchy_schwarz_check_examples() {
        let pitch = 0.4;
        // Proportional vectors: equality.
        let u = synth::random_field(4, pitch, 10);
        let v = u.scaled_real(2.0);
        let (lhs, rhs, slack) = cauchy_schwarz_check(&u, &v).unwrap();
        assert!(slack.abs() <= 1e-12 * rhs);
        assert!((rhs - 2.0 * u.l2_norm() * u.l2_norm()).abs() <= 1e-12 * rhs);
        assert!(lhs > 0.0);

        // Orthogonal component patterns: lhs 0, rhs 1.
        let mut a = vec![Complex64::new(0.0, 0.0); 4];
        let mut b = vec![Complex64::new(0.0, 0.0); 4];
        a[0] = Complex64::new(1.0, 0.0);
        b[0] = Complex64::new(0.0, 1.0);
        let ua = crate::field::AmplitudeField::new(2, pitch, a).unwrap();
        let vb = crate::field::AmplitudeField::new(2, pitch, b).unwrap();
        let (lhs, rhs, slack) = cauchy_schwarz_check(&ua, &vb).unwrap();
        assert_eq!(lhs, 0.0);
        assert!((rhs - 1.0).abs() <= 1e-12);
        assert!((slack - 1.0).abs() <= 1e-12);

        // Random pairs: slack never negative.
        for seed in 0..10u64 {
            let x = synth::random_field(8, pitch, 400 + seed);
            let y = synth::random_field(8, pitch, 500 + seed);
            let (_, _, slack) = cauchy_schwarz_check(&x, &y).unwrap();
            assert!(slack >= 0.0);
        }
    }

    #[test]
    fn lossless_band_limited_contraction_is_equality() {
        // Panel-free chain: phase panels would scatter power into evanescent
        // bins, which truncation then removes; pure hops restricted to the
        // propagating band are exactly unitary.
        let stack = synth::lossless_stack(8, 0, 1, EvanescentMode::Truncate, 11).unwrap();
        let spec = stack.propagations()[0].clone();
        let psi = synth::band_limited_unit_field(8, &spec, 12);
        let phi = synth::band_limited_unit_field(8, &spec, 13);
        let check = contraction_step_check(&stack, &psi, &phi).unwrap();
        for (pre, post) in check.pre_norms.iter().zip(&check.post_norms) {
            assert!(
                (pre - post).abs() <= 1e-10 * pre.max(1.0),
                "pre {pre} post {post}"
            );
        }
        assert!(check.holds());
    }

    #[test]
    fn absorbing_stack_annihilates_norms() {
        let n = 4;
        let absorption = vec![crate::optics::MAX_ABSORPTION; n * n];
        let panel =
            crate::optics::DiffractivePanel::new(n, absorption, vec![0.0; n * n]).unwrap();
        let hop = crate::optics::PropagationSpec::new(5.0, 0.75, 0.4).unwrap();
        let stack = OpticalStack::new(n, vec![panel], vec![hop.clone(), hop]).unwrap();
        let psi = synth::random_unit_field(n, 0.4, 14);
        let phi = synth::random_unit_field(n, 0.4, 15);
        let check = contraction_step_check(&stack, &psi, &phi).unwrap();
        assert!(check.post_norms[0] <= 1e-15);
        assert!(check.post_norms[1] <= 1e-15);
        assert!(check.holds());
    }

    #[test]
    fn random_passive_contraction_slacks_nonnegative() {
        for seed in 0..10u64 {
            let stack = fixture(600 + seed);
            let psi = synth::random_field(8, stack.pixel_pitch(), 700 + seed);
            let phi = synth::random_field(8, stack.pixel_pitch(), 800 + seed);
            let check = contraction_step_check(&stack, &psi, &phi).unwrap();
            assert!(check.holds(), "seed {seed}: {:?}", check.slacks);
        }
    }

    fn pdp_fixture() -> (OpticalStack, DetectorRegions, AmplitudeField, AmplitudeField) {
        let stack = fixture(21);
        let regions = DetectorRegions::grid_layout(8, 2).unwrap();
        let base = synth::random_unit_field(8, stack.pixel_pitch(), 22);
        let dir = synth::orthogonal_direction(&base, 23).unwrap();
        (stack, regions, base, dir)
    }

    #[test]
    fn zero_epsilon_row_is_exactly_undetectable() {
        let (stack, regions, base, dir) = pdp_fixture();
        let rows = pdp_scan(&stack, &regions, &base, &dir, &[0.0], 0.05, 50, 9).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].tvd, 0.0);
        assert_eq!(rows[0].input_l2_distance, 0.0);
        assert!(!rows[0].detectable);
    }

    #[test]
    fn zero_noise_makes_any_perturbation_detectable() {
        let (stack, regions, base, dir) = pdp_fixture();
        let rows = pdp_scan(&stack, &regions, &base, &dir, &[0.05], 0.0, 10, 9).unwrap();
        assert!(rows[0].detectable);
        assert_eq!(rows[0].detect_fraction, 1.0);
        assert!(rows[0].tvd > 0.0);
    }

    #[test]
    fn tvd_never_exceeds_bound_along_a_scan() {
        let (stack, regions, base, dir) = pdp_fixture();
        let epsilons: Vec<f64> = (0..=10).map(|i| i as f64 * 0.05).collect();
        let rows = pdp_scan(&stack, &regions, &base, &dir, &epsilons, 0.01, 20, 9).unwrap();
        for row in &rows {
            assert!(
                row.tvd <= row.bound + 1e-12,
                "eps {}: tvd {} > bound {}",
                row.epsilon,
                row.tvd,
                row.bound
            );
        }
        // For a unit direction orthogonal to the base, the normalized input
        // distance is at most ε, so the bound is at most 2ε.
        for row in &rows {
            assert!(row.bound <= 2.0 * row.epsilon + 1e-12);
        }
    }

    #[test]
    fn tvd_trend_is_monotone_for_small_epsilon() {
        // Statistical check: over random instances, consecutive scan points
        // are ordered in at least 95% of cases.
        let epsilons: Vec<f64> = (0..=10).map(|i| i as f64 * 0.05).collect();
        let mut ordered = 0usize;
        let mut total = 0usize;
        for seed in 0..10u64 {
            let stack = fixture(900 + seed);
            let base = synth::random_unit_field(8, stack.pixel_pitch(), 910 + seed);
            let dir = synth::orthogonal_direction(&base, 920 + seed).unwrap();
            let regions = DetectorRegions::grid_layout(8, 2).unwrap();
            let rows =
                pdp_scan(&stack, &regions, &base, &dir, &epsilons, 0.0, 1, seed).unwrap();
            for w in rows.windows(2) {
                total += 1;
                if w[1].tvd >= w[0].tvd - 1e-12 {
                    ordered += 1;
                }
            }
        }
        assert!(
            ordered as f64 >= 0.95 * total as f64,
            "ordered {ordered}/{total}"
        );
    }

    #[test]
    fn pdp_scan_is_reproducible() {
        let (stack, regions, base, dir) = pdp_fixture();
        let eps = [0.0, 0.1, 0.2];
        let a = pdp_scan(&stack, &regions, &base, &dir, &eps, 0.05, 40, 5).unwrap();
        let b = pdp_scan(&stack, &regions, &base, &dir, &eps, 0.05, 40, 5).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.detect_fraction, y.detect_fraction);
            assert_eq!(x.tvd, y.tvd);
        }
    }
}
