//! Regression test for the guard against deviance-raising update proposals.
//!
//! On near-balanced binary data the quadratic surrogate's fixed curvature
//! constant understates the true multinomial curvature along the active
//! contrast, so a raw proposal can overshoot and *raise* the deviance. The
//! dataset below (two categories split 50/49, one weak predictor) is a
//! concrete instance: without the guard, every update scheme steps uphill on
//! its second iteration. The fitter must refuse such a proposal, report
//! convergence, and return the best iterate it has seen.

use mcd::ndarray::Array2;
use mcd::{fit, DesignSet, FitOptions, Observations, ProfileCoding, TermSet, UpdateScheme};

#[rustfmt::skip]
const Y: [usize; 99] = [
    0, 1, 0, 1, 0, 1, 1, 1, 0, 1, 0, 1, 1, 1, 1, 1, 0, 0, 0, 0, 1, 1, 0, 1,
    1, 0, 1, 0, 1, 1, 1, 0, 1, 0, 1, 0, 0, 1, 1, 1, 1, 1, 0, 1, 0, 1, 1, 0,
    0, 0, 1, 1, 1, 1, 0, 1, 1, 1, 0, 0, 0, 0, 0, 1, 1, 0, 1, 1, 0, 1, 0, 0,
    0, 0, 1, 0, 1, 0, 0, 1, 0, 0, 0, 1, 0, 1, 0, 0, 0, 0, 1, 0, 1, 0, 1, 0,
    0, 0, 0,
];

#[rustfmt::skip]
const X: [f64; 99] = [
    0.361501, -0.931924, -0.623568, -0.609889, 0.461027, -0.593839, 0.462893,
    -0.872902, -0.183009, -0.365789, 0.067278, 0.729643, 0.134401, -0.597747,
    -0.729028, 0.710140, 0.008469, 0.530160, 0.010220, 0.865083, 0.390520,
    0.802560, -0.380651, 0.667916, -0.439217, -0.423308, -0.905304, -0.277279,
    -0.803860, -0.167598, -0.082351, 0.349973, 0.406268, -0.767651, -0.272166,
    -0.983923, -0.992715, 0.096657, -0.714845, 0.919867, -0.014348, 0.583486,
    -0.261424, 0.928812, -0.546625, 0.983114, 0.933486, 0.098471, -0.942515,
    -0.405319, 0.640088, -0.159306, 0.277606, 0.796413, -0.090824, 0.415883,
    -0.643370, -0.337352, 0.043346, -0.439419, -0.748725, -0.520637, -0.392349,
    -0.210267, 0.399587, -0.869622, -0.932089, 0.178303, 0.062470, 0.776512,
    -0.081735, -0.837097, 0.127886, -0.366991, -0.966652, -0.387819, 0.615849,
    0.416378, -0.152020, -0.686727, 0.189992, 0.037363, -0.023526, 0.904928,
    -0.249321, -0.833754, -0.512943, -0.331425, 0.412865, -0.707444, 0.741061,
    0.711049, 0.521764, -0.828699, 0.002610, -0.475772, -0.926662, -0.568129,
    -0.766202,
];

#[test]
fn rising_proposals_are_rejected_on_near_balanced_binary_data() {
    let x = Array2::from_shape_fn((99, 1), |(i, _)| X[i]);
    let g = Observations::from_indices(&Y, 2).unwrap();
    let d = DesignSet::from_profile(
        ProfileCoding::new(1).unwrap(),
        TermSet::parse(&["1"]).unwrap(),
        TermSet::parse(&["1"]).unwrap(),
        x,
        vec!["x1".into()],
    )
    .unwrap();

    for scheme in
        [UpdateScheme::JointGsvd, UpdateScheme::Alternating, UpdateScheme::DimensionWise]
    {
        let opts = FitOptions { scheme, trace: true, ..Default::default() };
        let f = fit(&g, &d, 1, &opts).unwrap();
        let trace = f.trace.as_ref().unwrap();

        assert!(trace.len() >= 2, "{scheme:?}: expected at least one accepted iteration");
        for t in 1..trace.len() {
            assert!(
                trace[t] <= trace[t - 1] + 1e-10,
                "{scheme:?}: deviance rose from {} to {} at iteration {t}",
                trace[t - 1],
                trace[t],
            );
        }
        assert!(
            f.converged,
            "{scheme:?}: the fit should stop by refusal or tolerance, not the iteration cap"
        );
        let best = trace.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(
            (f.state.deviance - best).abs() <= 1e-12,
            "{scheme:?}: final deviance {} differs from the best iterate {best}",
            f.state.deviance,
        );
    }
}
