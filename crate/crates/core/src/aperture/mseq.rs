use crate::error::{ensure_arg, Result};

/// Exponents of the primitive polynomial used for each supported degree,
/// highest first, constant term included.
pub fn primitive_polynomial(degree: u32) -> Option<&'static [u32]> {
    Some(match degree {
        2 => &[2, 1, 0],
        3 => &[3, 2, 0],
        4 => &[4, 3, 0],
        5 => &[5, 2, 0],
        6 => &[6, 5, 0],
        7 => &[7, 6, 0],
        8 => &[8, 6, 5, 4, 0],
        9 => &[9, 5, 0],
        10 => &[10, 7, 0],
        11 => &[11, 9, 0],
        12 => &[12, 11, 10, 4, 0],
        13 => &[13, 12, 11, 8, 0],
        14 => &[14, 13, 12, 2, 0],
        15 => &[15, 14, 0],
        16 => &[16, 15, 13, 4, 0],
        _ => return None,
    })
}

/// Maximal-length sequence of length `2^degree − 1` as 0/1 bits.
///
/// For `p(x) = x^n + Σ c_i x^i` the sequence obeys
/// `s_{t+n} = Σ_{i<n} c_i s_{t+i} (mod 2)`, seeded with all ones.
pub fn msequence(degree: u32) -> Result<Vec<u8>> {
    let poly = primitive_polynomial(degree);
    ensure_arg!(
        poly.is_some(),
        "m-sequence degree {degree} unsupported (valid: 2..=16)"
    );
    let poly = poly.unwrap();
    let n = degree as usize;
    let taps: Vec<usize> = poly.iter().filter(|&&e| e < degree).map(|&e| e as usize).collect();
    let len = (1usize << n) - 1;
    let mut s = vec![1u8; n];
    s.reserve(len);
    while s.len() < len {
        let t = s.len() - n;
        let next = taps.iter().fold(0u8, |acc, &i| acc ^ s[t + i]);
        s.push(next);
    }
    s.truncate(len);
    Ok(s)
}
