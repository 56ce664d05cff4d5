//! Named exponent scenarios.

use relaylab::model::{BaseConstants, Exponent, ScalingExponents};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scenario {
    pub name: &'static str,
    pub exponents: ScalingExponents,
    /// Tabulated SINR exponent.
    pub expected_r_s: Exponent,
}

fn r(n: i64, d: i64) -> Exponent {
    Exponent::new(n, d)
}

fn scenario(
    name: &'static str,
    [rk, rp, rq, rc]: [Exponent; 4],
    bases: BaseConstants,
    expected_r_s: Exponent,
) -> Scenario {
    Scenario {
        name,
        exponents: ScalingExponents::with_bases(rk, rp, rq, rc, bases).expect("built-in scenario is valid"),
        expected_r_s,
    }
}

/// The five network settings of the mean-SINR scaling figure.
///
/// Case 1: `P_c = 0.8`, `P = Q = 10`, `K = M/10`.
/// Case 2: `P_c = 100/M`, `P = Q = 10`, `K = 10`.
/// Case 3: `P_c = 0.8`, `P = 10`, `Q = 1/sqrt(M)`, `K = floor(sqrt(M))`.
/// Case 4: `P_c = 0.8`, `P = Q = 1`, `K = 20`.
/// Case 5: `P_c = 10/sqrt(M)`, `P = Q = 10`, `K = 20`.
pub fn table_one() -> [Scenario; 5] {
    let z = r(0, 1);
    let one = r(1, 1);
    let half = r(1, 2);
    let b = |k0, p0, q0, c0| BaseConstants { k0, p0, q0, c0 };
    [
        scenario("case1", [one, z, z, z], b(0.1, 0.1, 0.1, 1.25), z),
        scenario("case2", [z, z, z, one], b(10.0, 0.1, 0.1, 0.01), z),
        scenario("case3", [half, z, half, z], b(1.0, 0.1, 1.0, 1.25), z),
        scenario("case4", [z, z, z, z], b(20.0, 1.0, 1.0, 1.25), one),
        scenario("case5", [z, z, z, half], b(20.0, 0.1, 0.1, 0.1), half),
    ]
}

/// Exponent tuples meeting the sufficient condition for a deterministic SINR.
///
/// `scenario1`: `r_k = r_c = r_q = 0`, `r_p = 1/2`, so `r_s = 1/2`;
/// `K = 2`, `P = 1/(2 sqrt(M))`, `Q = 1`, `P_c = 0.8`.
/// `scenario2b`: `r_c = r_q = 1/2`, `r_p = 1/4`, `r_k = 0`, so `r_s = 0`;
/// `K = 2`, `P = M^{-1/4}`, `Q = 1/sqrt(M)`, `P_c = 4/sqrt(M)`.
pub fn deterministic_scenarios() -> [Scenario; 2] {
    let z = r(0, 1);
    [
        scenario(
            "scenario1",
            [z, r(1, 2), z, z],
            BaseConstants {
                k0: 2.0,
                p0: 2.0,
                q0: 1.0,
                c0: 1.25,
            },
            r(1, 2),
        ),
        scenario(
            "scenario2b",
            [z, r(1, 4), r(1, 2), r(1, 2)],
            BaseConstants {
                k0: 2.0,
                p0: 1.0,
                q0: 1.0,
                c0: 0.25,
            },
            z,
        ),
    ]
}

pub fn by_name(name: &str) -> Option<Scenario> {
    table_one()
        .into_iter()
        .chain(deterministic_scenarios())
        .find(|s| s.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use relaylab::model::{is_asymptotically_deterministic, realize_parameters, scaling_report, sinr_exponent};

    #[test]
    fn table_matches_its_printed_settings() {
        let [c1, c2, c3, c4, c5] = table_one();
        let p = realize_parameters(&c1.exponents, 200).unwrap();
        assert_eq!((p.k(), p.p_c()), (20, 0.8));
        assert!((p.p() - 10.0).abs() < 1e-12 && (p.q() - 10.0).abs() < 1e-12);
        let p = realize_parameters(&c2.exponents, 400).unwrap();
        assert_eq!(p.k(), 10);
        assert!((p.p_c() - 0.25).abs() < 1e-15);
        let p = realize_parameters(&c3.exponents, 100).unwrap();
        assert_eq!(p.k(), 10);
        assert!((p.q() - 0.1).abs() < 1e-15);
        for m in [64, 512] {
            let p = realize_parameters(&c4.exponents, m).unwrap();
            assert_eq!((p.k(), p.p(), p.q(), p.p_c()), (20, 1.0, 1.0, 0.8));
        }
        let p = realize_parameters(&c5.exponents, 400).unwrap();
        assert!((p.p_c() - 0.5).abs() < 1e-15);
        assert_eq!(p.k(), 20);
    }

    #[test]
    fn tabulated_exponents_follow_the_scaling_law() {
        for s in table_one().iter().chain(&deterministic_scenarios()) {
            assert_eq!(sinr_exponent(&s.exponents), s.expected_r_s, "{}", s.name);
        }
        assert!(scaling_report(&table_one()[3].exponents).linear_regime);
    }

    #[test]
    fn deterministic_scenarios_meet_the_condition() {
        for s in deterministic_scenarios() {
            assert!(is_asymptotically_deterministic(&s.exponents, s.expected_r_s), "{}", s.name);
            for m in [64, 128, 256, 512] {
                let p = realize_parameters(&s.exponents, m).unwrap();
                assert!(p.p_c() < 1.0, "{} at {m}", s.name);
            }
        }
    }
}
