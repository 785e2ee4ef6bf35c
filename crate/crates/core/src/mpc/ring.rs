//! Wrapping arithmetic on flat row-major `u64` matrices.

pub fn ring_add(a: &[u64], b: &[u64]) -> Vec<u64> {
    a.iter().zip(b).map(|(x, y)| x.wrapping_add(*y)).collect()
}

pub fn ring_sub(a: &[u64], b: &[u64]) -> Vec<u64> {
    a.iter().zip(b).map(|(x, y)| x.wrapping_sub(*y)).collect()
}

pub(crate) fn add_assign(a: &mut [u64], b: &[u64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x = x.wrapping_add(*y);
    }
}

/// `(k × n) · (n × m)` modulo `2^64`.
pub fn ring_matmul(a: &[u64], b: &[u64], k: usize, n: usize, m: usize) -> Vec<u64> {
    debug_assert_eq!(a.len(), k * n);
    debug_assert_eq!(b.len(), n * m);
    let mut out = vec![0u64; k * m];
    if m == 1 {
        for (i, o) in out.iter_mut().enumerate() {
            *o = a[i * n..(i + 1) * n]
                .iter()
                .zip(b)
                .fold(0u64, |acc, (x, y)| acc.wrapping_add(x.wrapping_mul(*y)));
        }
        return out;
    }
    for i in 0..k {
        let row = &mut out[i * m..(i + 1) * m];
        for (kk, &aik) in a[i * n..(i + 1) * n].iter().enumerate() {
            if aik == 0 {
                continue;
            }
            for (o, &bv) in row.iter_mut().zip(&b[kk * m..(kk + 1) * m]) {
                *o = o.wrapping_add(aik.wrapping_mul(bv));
            }
        }
    }
    out
}
