//! Reference codes with exact amplitudes.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::qla::{self, c, CVector};
use crate::stab::{self, LogicalBasis, StabilizerGroup};

use super::{dicke, QuantumCode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Fixture {
    FiveQubit,
    Steane,
    Pi422,
    Pi723,
    Xp782,
}

impl Fixture {
    pub const ALL: [Fixture; 5] = [
        Fixture::FiveQubit,
        Fixture::Steane,
        Fixture::Pi422,
        Fixture::Pi723,
        Fixture::Xp782,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Fixture::FiveQubit => "five_qubit",
            Fixture::Steane => "steane",
            Fixture::Pi422 => "pi_4_2_2",
            Fixture::Pi723 => "pi_7_2_3",
            Fixture::Xp782 => "xp_7_8_2",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Fixture::FiveQubit => "[[5,1,3]] perfect code, as the extension of <XZZ,ZYY,ZZX,YYZ>",
            Fixture::Steane => "[[7,1,3]] Steane code",
            Fixture::Pi422 => "((4,2,2)) permutation-invariant code",
            Fixture::Pi723 => "((7,2,3)) permutation-invariant code",
            Fixture::Xp782 => "((7,8,2)) XP code of precision 8",
        }
    }

    /// Generators for the stabilizer fixtures.
    pub fn stabilizer_group(self) -> Option<StabilizerGroup> {
        let gens: &[&str] = match self {
            Fixture::FiveQubit => &["XZZXI", "ZYYZI", "ZZXIX", "YYZIZ"],
            Fixture::Steane => &["IIIXXXX", "XIXIXIX", "IXXIIXX", "IIIZZZZ", "ZIZIZIZ", "IZZIIZZ"],
            _ => return None,
        };
        Some(StabilizerGroup::from_strings(gens).expect("fixture generators are valid"))
    }

    fn logical_basis(self) -> Option<LogicalBasis> {
        let (z, x) = match self {
            Fixture::FiveQubit => ("ZZZZZ", "XXXXX"),
            Fixture::Steane => ("ZZZZZZZ", "XXXXXXX"),
            _ => return None,
        };
        Some(LogicalBasis {
            z: vec![z.parse().expect("valid letters")],
            x: vec![x.parse().expect("valid letters")],
        })
    }
}

impl fmt::Display for Fixture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Fixture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Fixture::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::UnknownFixture(s.to_string()))
    }
}

fn superpose(n: usize, terms: &[(f64, usize)]) -> Result<CVector> {
    let mut v = CVector::zeros(1 << n);
    for &(coef, i) in terms {
        v += dicke(n, i)? * c(coef, 0.0);
    }
    Ok(v)
}

fn xp_codeword(a: &str, b: &str, power: u32) -> Result<CVector> {
    let omega = c(0.0, PI / 8.0).exp();
    let h = c(0.5f64.sqrt(), 0.0);
    Ok((qla::ket(a)? + qla::ket(b)? * omega.powu(power)) * h)
}

pub fn fixture(which: Fixture) -> Result<QuantumCode> {
    let code = match which {
        Fixture::FiveQubit | Fixture::Steane => {
            let g = which.stabilizer_group().expect("stabilizer fixture");
            let code = stab::codewords(&g, which.logical_basis().as_ref())?;
            QuantumCode::new(code.n(), code.basis().to_vec(), which.description())?
        }
        Fixture::Pi422 => {
            let (r3, r6) = (3f64.sqrt() / 3.0, 6f64.sqrt() / 3.0);
            let zero = superpose(4, &[(r3, 0), (r6, 3)])?;
            let one = superpose(4, &[(r6, 1), (-r3, 4)])?;
            QuantumCode::new(4, vec![zero, one], which.description())?
        }
        Fixture::Pi723 => {
            let (r7, r15, r21) = (7f64.sqrt() / 8.0, 15f64.sqrt() / 8.0, 21f64.sqrt() / 8.0);
            let zero = superpose(7, &[(r15, 0), (r7, 2), (r21, 4), (-r21, 6)])?;
            let one = superpose(7, &[(-r21, 1), (r21, 3), (r7, 5), (r15, 7)])?;
            QuantumCode::new(7, vec![zero, one], which.description())?
        }
        Fixture::Xp782 => {
            let table = [
                ("0000000", "1111111", 12),
                ("0000111", "1111000", 0),
                ("0001011", "1110100", 14),
                ("0001101", "1110010", 12),
                ("0011110", "1100001", 0),
                ("0011001", "1100110", 8),
                ("0010101", "1101010", 10),
                ("0010011", "1101100", 12),
            ];
            let basis = table
                .iter()
                .map(|&(a, b, p)| xp_codeword(a, b, p))
                .collect::<Result<Vec<_>>>()?;
            QuantumCode::new(7, basis, which.description())?
        }
    };
    Ok(code)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{min_distance, projector, Distance};
    use crate::qla::CMatrix;

    #[test]
    fn names_roundtrip() {
        for f in Fixture::ALL {
            assert_eq!(f.name().parse::<Fixture>().unwrap(), f);
        }
        assert!(matches!("toric".parse::<Fixture>(), Err(Error::UnknownFixture(_))));
    }

    #[test]
    fn orthonormal_to_high_precision() {
        for f in Fixture::ALL {
            let code = fixture(f).unwrap();
            let k = code.k_dim();
            let g = CMatrix::from_fn(k, k, |i, j| code.basis()[i].dotc(&code.basis()[j]));
            assert!((g - CMatrix::identity(k, k)).camax() < 1e-12, "{f}");
        }
    }

    #[test]
    fn dimensions_and_traces() {
        let dims = [(Fixture::FiveQubit, 5, 2), (Fixture::Steane, 7, 2), (Fixture::Pi422, 4, 2), (Fixture::Pi723, 7, 2), (Fixture::Xp782, 7, 8)];
        for (f, n, k) in dims {
            let code = fixture(f).unwrap();
            assert_eq!((code.n(), code.k_dim()), (n, k), "{f}");
            let p = projector(&code);
            assert!((qla::trace(&p).re - k as f64).abs() < 1e-12);
            assert!((&p * &p - &p).norm() < 1e-10);
        }
    }

    #[test]
    fn printed_amplitudes() {
        let pi = fixture(Fixture::Pi422).unwrap();
        assert!((pi.basis()[0][0].re - 3f64.sqrt() / 3.0).abs() < 1e-15);
        let xp = fixture(Fixture::Xp782).unwrap();
        let omega14 = c(0.0, 14.0 * PI / 8.0).exp() * c(0.5f64.sqrt(), 0.0);
        assert!((xp.basis()[2][0b1110100] - omega14).norm() < 1e-15);
        assert!((xp.basis()[2][0b0001011].re - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn five_qubit_is_stabilized() {
        let code = fixture(Fixture::FiveQubit).unwrap();
        let g = Fixture::FiveQubit.stabilizer_group().unwrap();
        for s in g.generators() {
            for v in code.basis() {
                assert!((s.apply(v) - v).norm() < 1e-12);
            }
        }
        let zbar: crate::codes::PauliOperator = "ZZZZZ".parse().unwrap();
        assert!((zbar.apply(&code.basis()[1]) + &code.basis()[1]).norm() < 1e-12);
    }

    #[test]
    fn small_distances() {
        assert_eq!(min_distance(&fixture(Fixture::Pi422).unwrap(), 3).unwrap(), Distance::Exact(2));
        assert_eq!(min_distance(&fixture(Fixture::FiveQubit).unwrap(), 3).unwrap(), Distance::Exact(3));
        assert_eq!(min_distance(&fixture(Fixture::Pi422).unwrap(), 1).unwrap(), Distance::AtLeast(2));
    }
}
