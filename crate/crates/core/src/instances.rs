//! The two small benchmark instances used for hardware-scale comparisons,
//! written in the signed-literal notation they were published in.

use crate::cnf::{CnfFormula, InstanceFormat};

pub const FOUR_VARIABLE_EXAMPLE: &str = "{[-0, +2, +3], [+0, +2, -3], [-1, +2, -3], [-1, -2, -3], \
     [-1, -2, +3], [+1, +2, -3], [+0, +2, +3], [-0, +1, -3]}";

pub const FIVE_VARIABLE_EXAMPLE: &str = "{[+1, -2, -3], [-1, -3, +4], [+0, -2, -4], [-0, -2, +3], \
     [+2, +3, +4], [-0, +1, +2], [+0, -2, 4], [-1, +2, -4]}";

pub fn four_variable_example() -> CnfFormula {
    CnfFormula::parse(FOUR_VARIABLE_EXAMPLE, InstanceFormat::Json).expect("valid instance")
}

pub fn five_variable_example() -> CnfFormula {
    CnfFormula::parse(FIVE_VARIABLE_EXAMPLE, InstanceFormat::Json).expect("valid instance")
}
