//! Closed-form performance analysis.

pub mod mixture;
pub mod moments;
pub mod outage;
pub mod special;

use std::io::Write;

use crate::error::Result;

pub use mixture::{
    gamma_mix_params, gamma_mix_params_with, interference_pdf, CorrelatedGammaSum, GammaMixParams, PdfForm, RhoForm,
    Weights,
};
pub use moments::{component_moments, rate_lower_bound, ComponentMoments, RateBound};
pub use outage::{
    aber, linear_regime_sinr, outage_probability, sinr_pdf, xi, OutageContext, OutageForm, Probability, Validity,
};

/// One row of an analytic curve.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint {
    pub x: f64,
    pub value: f64,
    pub form: String,
    pub valid_flags: String,
}

/// Writes `x,value,form,valid_flags` rows.
pub fn write_curve_csv<W: Write>(w: &mut W, points: &[CurvePoint]) -> Result<()> {
    writeln!(w, "x,value,form,valid_flags")?;
    for p in points {
        writeln!(w, "{:e},{:e},{},{}", p.x, p.value, p.form, p.valid_flags)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_csv_layout() {
        let pts = [CurvePoint { x: 1.0, value: 0.25, form: "exact".into(), valid_flags: "ok".into() }];
        let mut buf = Vec::new();
        write_curve_csv(&mut buf, &pts).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x,value,form,valid_flags\n1e0,2.5e-1,exact,ok\n");
    }
}
