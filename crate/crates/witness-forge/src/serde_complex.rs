//! JSON representation of complex numbers as `{"re": f, "im": f}`.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Serialize, Deserialize)]
struct CNum {
    re: f64,
    im: f64,
}

pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
    CNum { re: z.re, im: z.im }.serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
    let c = CNum::deserialize(d)?;
    Ok(Complex64::new(c.re, c.im))
}

/// Same encoding for `Vec<Complex64>` fields.
pub mod vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        let tmp: Vec<CNum> = v.iter().map(|z| CNum { re: z.re, im: z.im }).collect();
        tmp.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let tmp: Vec<CNum> = Vec::deserialize(d)?;
        Ok(tmp
            .into_iter()
            .map(|c| Complex64::new(c.re, c.im))
            .collect())
    }
}

/// And for the `m x n_modes` displacement matrix.
pub mod mat {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Vec<Complex64>], s: S) -> Result<S::Ok, S::Error> {
        let tmp: Vec<Vec<CNum>> = v
            .iter()
            .map(|row| row.iter().map(|z| CNum { re: z.re, im: z.im }).collect())
            .collect();
        tmp.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<Complex64>>, D::Error> {
        let tmp: Vec<Vec<CNum>> = Vec::deserialize(d)?;
        Ok(tmp
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|c| Complex64::new(c.re, c.im))
                    .collect()
            })
            .collect())
    }
}
