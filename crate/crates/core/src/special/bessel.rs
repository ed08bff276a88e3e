//! Exponentially scaled modified Bessel functions `e^{-x} I0(x)` and `e^{-x} I1(x)`.
//!
//! Chebyshev expansions on `[0, 8]` and in `32/x - 2` on `(8, inf)` (Cephes `i0e`/`i1e`).
//! Every kernel integrand in the crate combines `e^{-p(q^2 + r^2)} I0(2pqr)` into
//! `e^{-p(q - r)^2} i0e(2pqr)`, which stays bounded for any `p`.

use crate::error::{Error, Result};

// Chebyshev coefficients for exp(-x) I0(x) on [0, 8], argument x/2 - 2.
const I0E_SMALL: [f64; 30] = [
    -4.4153416464793395E-18,
    3.3307945188222384E-17,
    -2.431279846547955E-16,
    1.715391285555133E-15,
    -1.1685332877993451E-14,
    7.676185498604936E-14,
    -4.856446783111929E-13,
    2.95505266312964E-12,
    -1.726826291441556E-11,
    9.675809035373237E-11,
    -5.189795601635263E-10,
    2.6598237246823866E-9,
    -1.300025009986248E-8,
    6.046995022541919E-8,
    -2.670793853940612E-7,
    1.1173875391201037E-6,
    -4.4167383584587505E-6,
    1.6448448070728896E-5,
    -5.754195010082104E-5,
    1.8850288509584165E-4,
    -5.763755745385824E-4,
    1.6394756169413357E-3,
    -4.324309995050576E-3,
    1.0546460394594998E-2,
    -2.373741480589947E-2,
    4.930528423967071E-2,
    -9.490109704804764E-2,
    1.7162090152220877E-1,
    -3.046826723431984E-1,
    6.767952744094761E-1,
];

// Chebyshev coefficients for exp(-x) sqrt(x) I0(x) on (8, inf), argument 32/x - 2.
const I0E_LARGE: [f64; 25] = [
    -7.233180487874754E-18,
    -4.830504485944182E-18,
    4.46562142029676E-17,
    3.461222867697461E-17,
    -2.8276239805165836E-16,
    -3.425485619677219E-16,
    1.7725601330565263E-15,
    3.8116806693526224E-15,
    -9.554846698828307E-15,
    -4.150569347287222E-14,
    1.54008621752141E-14,
    3.8527783827421426E-13,
    7.180124451383666E-13,
    -1.7941785315068062E-12,
    -1.3215811840447713E-11,
    -3.1499165279632416E-11,
    1.1889147107846439E-11,
    4.94060238822497E-10,
    3.3962320257083865E-9,
    2.266668990498178E-8,
    2.0489185894690638E-7,
    2.8913705208347567E-6,
    6.889758346916825E-5,
    3.3691164782556943E-3,
    8.044904110141088E-1,
];

// Chebyshev coefficients for exp(-x) I1(x) / x on [0, 8], argument x/2 - 2.
const I1E_SMALL: [f64; 29] = [
    2.7779141127610464E-18,
    -2.111421214358166E-17,
    1.5536319577362005E-16,
    -1.1055969477353862E-15,
    7.600684294735408E-15,
    -5.042185504727912E-14,
    3.223793365945575E-13,
    -1.9839743977649436E-12,
    1.1736186298890901E-11,
    -6.663489723502027E-11,
    3.625590281552117E-10,
    -1.8872497517228294E-9,
    9.381537386495773E-9,
    -4.445059128796328E-8,
    2.0032947535521353E-7,
    -8.568720264695455E-7,
    3.4702513081376785E-6,
    -1.3273163656039436E-5,
    4.781565107550054E-5,
    -1.6176081582589674E-4,
    5.122859561685758E-4,
    -1.5135724506312532E-3,
    4.156422944312888E-3,
    -1.0564084894626197E-2,
    2.4726449030626516E-2,
    -5.294598120809499E-2,
    1.026436586898471E-1,
    -1.7641651835783406E-1,
    2.5258718644363365E-1,
];

// Chebyshev coefficients for exp(-x) sqrt(x) I1(x) on (8, inf), argument 32/x - 2.
const I1E_LARGE: [f64; 25] = [
    7.51729631084210481353E-18,
    4.41434832307170791151E-18,
    -4.65030536848935832153E-17,
    -3.20952592199342395980E-17,
    2.96262899764595013876E-16,
    3.30820231092092828324E-16,
    -1.88035477551078244854E-15,
    -3.81440307243700780478E-15,
    1.04202769841288027642E-14,
    4.27244001671195135429E-14,
    -2.10154184277266431302E-14,
    -4.08355111109219731823E-13,
    -7.19855177624590851209E-13,
    2.03562854414708950722E-12,
    1.41258074366137813316E-11,
    3.25260358301548823856E-11,
    -1.89749581235054123450E-11,
    -5.58974346219658380687E-10,
    -3.83538038596423702205E-9,
    -2.63146884688951950684E-8,
    -2.51223623787020892529E-7,
    -3.88256480887769039346E-6,
    -1.10588938762623716291E-4,
    -9.76109749136146840777E-3,
    7.78576235018280120474E-1,
];

const SPLIT: f64 = 8.0;

#[inline(always)]
fn chbevl(x: f64, coeffs: &[f64]) -> f64 {
    let mut b0 = coeffs[0];
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &c in &coeffs[1..] {
        b2 = b1;
        b1 = b0;
        b0 = x.mul_add(b1, c) - b2;
    }
    0.5 * (b0 - b2)
}

/// `e^{-x} I0(x)` for `x >= 0`. No domain check; callers pass nonnegative arguments.
#[inline]
pub fn i0e(x: f64) -> f64 {
    if x <= SPLIT {
        chbevl(0.5 * x - 2.0, &I0E_SMALL)
    } else {
        chbevl(32.0 / x - 2.0, &I0E_LARGE) / x.sqrt()
    }
}

/// `e^{-x} I1(x)` for `x >= 0`.
#[inline]
pub fn i1e(x: f64) -> f64 {
    if x <= SPLIT {
        chbevl(0.5 * x - 2.0, &I1E_SMALL) * x
    } else {
        chbevl(32.0 / x - 2.0, &I1E_LARGE) / x.sqrt()
    }
}

/// Both scaled functions at once; shares the branch and the square root.
#[inline]
pub fn i0e_i1e(x: f64) -> (f64, f64) {
    if x <= SPLIT {
        let y = 0.5 * x - 2.0;
        (chbevl(y, &I0E_SMALL), chbevl(y, &I1E_SMALL) * x)
    } else {
        let y = 32.0 / x - 2.0;
        let s = x.sqrt();
        (chbevl(y, &I0E_LARGE) / s, chbevl(y, &I1E_LARGE) / s)
    }
}

fn check_arg(x: f64) -> Result<()> {
    if x >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "scaled Bessel function needs a nonnegative argument, got {x}"
        )))
    }
}

/// `e^{-x} I0(x)`; finite for every `x >= 0`.
pub fn bessel_i0_scaled(x: f64) -> Result<f64> {
    check_arg(x)?;
    Ok(i0e(x))
}

/// `e^{-x} I1(x)`; finite for every `x >= 0`.
pub fn bessel_i1_scaled(x: f64) -> Result<f64> {
    check_arg(x)?;
    Ok(i1e(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    // 40-digit values of e^{-x} I0(x), e^{-x} I1(x) from an arbitrary-precision series.
    const REFERENCE: [(f64, f64, f64); 7] = [
        (0.5, 0.6450352704491500681, 0.1564208031848716971),
        (1.0, 0.4657596075936404365, 0.2079104153497084489),
        (5.0, 0.1835408126093283531, 0.1639722669445423569),
        (10.0, 0.1278333371634286073, 0.1212626813844555187),
        (20.0, 0.08978031188482602160, 0.08750622218328866536),
        (50.0, 0.05656162664745419253, 0.05599312389289539964),
        (100.0, 0.03994437929909668265, 0.03974415302513025267),
    ];

    #[test]
    fn values_at_zero() {
        assert_eq!(bessel_i0_scaled(0.0).unwrap(), 1.0);
        assert_eq!(bessel_i1_scaled(0.0).unwrap(), 0.0);
    }

    #[test]
    fn matches_high_precision_reference() {
        for &(x, i0, i1) in &REFERENCE {
            assert_relative_eq!(i0e(x), i0, max_relative = 1e-10);
            assert_relative_eq!(i1e(x), i1, max_relative = 1e-10);
            let (a, b) = i0e_i1e(x);
            assert_eq!(a, i0e(x));
            assert_eq!(b, i1e(x));
        }
    }

    #[test]
    fn negative_argument_is_domain_error() {
        assert!(matches!(bessel_i0_scaled(-1.0), Err(Error::Domain(_))));
        assert!(matches!(bessel_i1_scaled(-1e-300), Err(Error::Domain(_))));
    }

    #[test]
    fn derivative_of_i0_is_i1() {
        for &x in &[0.3, 1.0, 2.5, 7.9, 8.1, 15.0] {
            let h = 1e-5;
            let i0 = |t: f64| i0e(t) * t.exp();
            let d = (i0(x + h) - i0(x - h)) / (2.0 * h);
            assert_relative_eq!(d, i1e(x) * x.exp(), max_relative = 1e-5);
        }
    }

    #[test]
    fn large_argument_asymptotics() {
        for &x in &[1e3, 1e6] {
            let v = i0e(x) * (2.0 * std::f64::consts::PI * x).sqrt();
            assert!((v - 1.0).abs() < 0.05, "x = {x}: {v}");
        }
    }

    proptest! {
        #[test]
        fn ordering_and_bounds(x in 0.0f64..1e4) {
            let (a, b) = i0e_i1e(x);
            prop_assert!(a > 0.0 && a <= 1.0);
            prop_assert!(b >= 0.0 && b < a);
        }
    }
}
