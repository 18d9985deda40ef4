use alloc::boxed::Box;
use alloc::vec::Vec;
use core::f64::consts::PI;

use once_cell::race::OnceBox;

use crate::C64;

const MAX_LOG2: usize = 24;

static TWIDDLES: [OnceBox<Vec<C64>>; MAX_LOG2 + 1] = [const { OnceBox::new() }; MAX_LOG2 + 1];

fn twiddles(log2: usize) -> &'static [C64] {
    TWIDDLES[log2].get_or_init(|| {
        let n = 1usize << log2;
        let table = (0..n / 2)
            .map(|j| C64::from_polar(1.0, -2.0 * PI * j as f64 / n as f64))
            .collect();
        Box::new(table)
    })
}

fn transform(buf: &mut [C64], inverse: bool) {
    let n = buf.len();
    assert!(n.is_power_of_two() && n <= 1 << MAX_LOG2, "fft length {n}");
    if n < 2 {
        return;
    }
    let log2 = n.trailing_zeros() as usize;
    let shift = usize::BITS as usize - log2;
    for i in 0..n {
        let j = i.reverse_bits() >> shift;
        if j > i {
            buf.swap(i, j);
        }
    }
    let tw = twiddles(log2);
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let stride = n / len;
        for start in (0..n).step_by(len) {
            for j in 0..half {
                let mut w = tw[j * stride];
                if inverse {
                    w = w.conj();
                }
                let a = buf[start + j];
                let b = buf[start + j + half] * w;
                buf[start + j] = a + b;
                buf[start + j + half] = a - b;
            }
        }
        len <<= 1;
    }
}

/// `X_k = Σ_j x_j e^{-2πi jk/n}`, unnormalized.
pub(crate) fn fft_forward(buf: &mut [C64]) {
    transform(buf, false);
}

/// `x_j = Σ_k X_k e^{2πi jk/n}`, unnormalized.
pub(crate) fn fft_inverse(buf: &mut [C64]) {
    transform(buf, true);
}
