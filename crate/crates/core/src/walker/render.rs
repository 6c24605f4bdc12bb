use std::fmt::Write as _;

use super::pyfloat::repr;
use super::{MuscleKind, WalkerSpec};

/// Renders a walker as a straight-line `make_walker` program against the
/// `walker_creator` interface. Executing the program reproduces `spec`
/// exactly when `spec` is valid.
///
/// ```text
/// def make_walker():
///     wc = walker_creator()
///     j0 = wc.add_joint(0.0, 0.0)
///     j1 = wc.add_joint(0.0, 10.0)
///     wc.add_muscle(j0, j1)
///     wc.add_muscle(j0, j1, False, 2.0, 0.25)
///     return wc.get_walker()
/// ```
pub fn render_program(spec: &WalkerSpec) -> String {
    let mut out = String::from("def make_walker():\n    wc = walker_creator()\n");
    for (i, j) in spec.joints.iter().enumerate() {
        let _ = writeln!(out, "    j{i} = wc.add_joint({}, {})", repr(j.x), repr(j.y));
    }
    for m in &spec.muscles {
        match m.kind {
            MuscleKind::Distance => {
                let _ = writeln!(out, "    wc.add_muscle(j{}, j{})", m.a, m.b);
            }
            MuscleKind::Oscillating { amplitude, phase } => {
                let _ = writeln!(
                    out,
                    "    wc.add_muscle(j{}, j{}, False, {}, {})",
                    m.a,
                    m.b,
                    repr(amplitude),
                    repr(phase)
                );
            }
        }
    }
    out.push_str("    return wc.get_walker()\n");
    out
}
