//! Guard expressions over simulation counters.
//!
//! Values are integers; booleans are `0`/`1` and any nonzero integer is true,
//! so every expression evaluates on every counter map. Unknown counters read
//! as `0`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub type Counters = BTreeMap<String, i64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn as_str(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    fn apply(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum GuardExpr {
    Int(i64),
    Bool(bool),
    Counter(String),
    Not(Box<GuardExpr>),
    And(Box<GuardExpr>, Box<GuardExpr>),
    Or(Box<GuardExpr>, Box<GuardExpr>),
    Compare(Box<GuardExpr>, CmpOp, Box<GuardExpr>),
}

impl GuardExpr {
    pub fn counter(name: &str) -> Self {
        GuardExpr::Counter(name.to_owned())
    }

    pub fn compare(lhs: GuardExpr, op: CmpOp, rhs: GuardExpr) -> Self {
        GuardExpr::Compare(Box::new(lhs), op, Box::new(rhs))
    }

    pub fn eval(&self, counters: &Counters) -> bool {
        self.value(counters) != 0
    }

    fn value(&self, counters: &Counters) -> i64 {
        match self {
            GuardExpr::Int(n) => *n,
            GuardExpr::Bool(b) => i64::from(*b),
            GuardExpr::Counter(name) => counters.get(name).copied().unwrap_or(0),
            GuardExpr::Not(e) => i64::from(!e.eval(counters)),
            GuardExpr::And(a, b) => i64::from(a.eval(counters) && b.eval(counters)),
            GuardExpr::Or(a, b) => i64::from(a.eval(counters) || b.eval(counters)),
            GuardExpr::Compare(a, op, b) => i64::from(op.apply(a.value(counters), b.value(counters))),
        }
    }

    /// Counter names referenced anywhere in the expression.
    pub fn counters(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_counters(&mut out);
        out
    }

    fn collect_counters<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            GuardExpr::Counter(n) => {
                if !out.contains(&n.as_str()) {
                    out.push(n);
                }
            }
            GuardExpr::Int(_) | GuardExpr::Bool(_) => {}
            GuardExpr::Not(e) => e.collect_counters(out),
            GuardExpr::And(a, b) | GuardExpr::Or(a, b) | GuardExpr::Compare(a, _, b) => {
                a.collect_counters(out);
                b.collect_counters(out);
            }
        }
    }

    // or = 1, and = 2, compare = 3, not/atoms = 4
    fn precedence(&self) -> u8 {
        match self {
            GuardExpr::Or(..) => 1,
            GuardExpr::And(..) => 2,
            GuardExpr::Compare(..) => 3,
            _ => 4,
        }
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &GuardExpr, min: u8) -> fmt::Result {
    if e.precedence() < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for GuardExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GuardExpr::Int(n) => write!(f, "{n}"),
            GuardExpr::Bool(b) => write!(f, "{b}"),
            GuardExpr::Counter(n) => f.write_str(n),
            GuardExpr::Not(e) => {
                f.write_str("not ")?;
                write_operand(f, e, 4)
            }
            // left-associative: the right operand needs parens at equal precedence
            GuardExpr::Or(a, b) => {
                write_operand(f, a, 1)?;
                f.write_str(" or ")?;
                write_operand(f, b, 2)
            }
            GuardExpr::And(a, b) => {
                write_operand(f, a, 2)?;
                f.write_str(" and ")?;
                write_operand(f, b, 3)
            }
            GuardExpr::Compare(a, op, b) => {
                write_operand(f, a, 4)?;
                write!(f, " {} ", op.as_str())?;
                write_operand(f, b, 4)
            }
        }
    }
}

impl Serialize for GuardExpr {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GuardExpr {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        crate::dsl::parse_guard(&text).map_err(|diags| {
            let msg = diags.first().map(|d| d.message.clone()).unwrap_or_else(|| "invalid guard".to_owned());
            serde::de::Error::custom(msg)
        })
    }
}
