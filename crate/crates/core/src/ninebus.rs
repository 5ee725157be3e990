//! Post-fault 3-machine 9-bus swing equations in explicit trig form.
//!
//! States are `(x1, ..., x6)` with angles at `x1, x3, x5` and speeds at
//! `x2, x4, x6`. Coefficients carry three significant digits.

use alloc::vec;
use alloc::vec::Vec;

use crate::trig::{TrigComponent, TrigField, TrigTerm, Wave};

/// Equilibrium as printed: common angle offset 3.12, zero speeds.
pub const X_SEP: [f64; 6] = [3.12, 0.0, 3.12, 0.0, 3.12, 0.0];

/// Rotor angles at the post-fault operating point, read off the phase shifts.
pub const OPERATING_ANGLES: [f64; 3] = [0.0, 0.728, 0.463];

fn wave(amplitude: f64, wave: Wave, i: usize, j: usize, phase: f64) -> TrigTerm {
    TrigTerm { amplitude, wave, direction: vec![(i, 1.0), (j, -1.0)], phase }
}

fn speed(i: usize, constant: f64, terms: Vec<TrigTerm>) -> TrigComponent {
    TrigComponent { constant, linear: vec![(i, -0.5)], terms }
}

fn angle(i: usize) -> TrigComponent {
    TrigComponent { constant: 3.12, linear: vec![(i, 1.0)], terms: vec![] }
}

/// Transcribed term by term.
///
/// The three speed equations share the constant `-5.98`, which balances only
/// the first one at `X_SEP`; see [`balanced`].
pub fn literal() -> TrigField {
    use Wave::{Cos, Sin};
    let (a1, a2, a3) = (0, 2, 4);
    TrigField {
        components: vec![
            angle(1),
            speed(
                1,
                -5.98,
                vec![
                    wave(-1.14, Cos, a1, a2, -0.728),
                    wave(-6.25, Sin, a1, a2, -0.728),
                    wave(-1.56, Cos, a1, a3, -0.463),
                    wave(-9.11, Sin, a1, a3, -0.463),
                ],
            ),
            angle(3),
            speed(
                3,
                -5.98,
                vec![
                    wave(-4.22, Cos, a1, a2, -0.728),
                    wave(23.1, Sin, a1, a2, -0.728),
                    wave(-6.04, Cos, a2, a3, 0.265),
                    wave(-38.0, Sin, a2, a3, 0.265),
                ],
            ),
            angle(5),
            speed(
                5,
                -5.98,
                vec![
                    wave(-12.3, Cos, a1, a3, -0.463),
                    wave(71.6, Sin, a1, a3, -0.463),
                    wave(-12.8, Cos, a2, a3, 0.265),
                    wave(80.7, Sin, a2, a3, 0.265),
                ],
            ),
        ],
        angle_states: vec![a1, a2, a3],
    }
}

/// The literal field with each speed-equation constant replaced by the value
/// that makes `X_SEP` a relative equilibrium (all angles drifting at 3.12).
pub fn balanced() -> TrigField {
    let mut field = literal();
    let f = field.eval(&X_SEP).expect("fixture dimension");
    for i in [1, 3, 5] {
        field.components[i].constant -= f[i];
    }
    field
}
