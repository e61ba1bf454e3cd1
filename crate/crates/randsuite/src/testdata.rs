//! Known-answer reference data for validating the battery.

/// First `len` bits of the binary expansion of e (integer part included, so
/// the stream starts `10 1011011111...`), as 0/1 bytes.
///
/// Computed with an exact fixed-point spigot over the factorial series
/// e = sum 1/k!, carrying 64 guard bits.
pub fn e_expansion_bits(len: usize) -> Vec<u8> {
    assert!(len >= 2, "need at least the two integer-part bits");
    let precision = len + 64;
    let limbs = precision / 64 + 1;

    // term = 2^precision, acc = sum_{k >= 2} 2^precision / k!
    let mut term = vec![0u64; limbs];
    term[precision / 64] = 1 << (precision % 64);
    let mut acc = vec![0u64; limbs];
    let mut top = precision / 64; // highest possibly-nonzero limb of term

    let mut k = 2u64;
    loop {
        // term /= k, most significant limb first.
        let mut remainder = 0u64;
        let mut new_top = 0usize;
        for i in (0..=top).rev() {
            let current = (u128::from(remainder) << 64) | u128::from(term[i]);
            let q = (current / u128::from(k)) as u64;
            remainder = (current % u128::from(k)) as u64;
            term[i] = q;
            if q != 0 && new_top == 0 {
                new_top = i;
            }
        }
        top = new_top;
        if term[top] == 0 {
            break;
        }
        // acc += term
        let mut carry = 0u64;
        for i in 0..=top {
            let (sum, c1) = acc[i].overflowing_add(term[i]);
            let (sum, c2) = sum.overflowing_add(carry);
            acc[i] = sum;
            carry = u64::from(c1) + u64::from(c2);
        }
        let mut i = top + 1;
        while carry > 0 && i < limbs {
            let (sum, c) = acc[i].overflowing_add(carry);
            acc[i] = sum;
            carry = u64::from(c);
            i += 1;
        }
        k += 1;
    }

    // Fraction bit j (j = 0 first) is bit precision-1-j of acc.
    let mut out = Vec::with_capacity(len);
    out.push(1);
    out.push(0);
    for j in 0..len - 2 {
        let bit = precision - 1 - j;
        out.push(((acc[bit / 64] >> (bit % 64)) & 1) as u8);
    }
    out
}
