//! Number formatting for CSV output: 12 significant digits, trailing zeros
//! trimmed, scientific notation outside `[1e-4, 1e12)` in the style of C's `%.12g`.

const DIGITS: i32 = 12;

pub fn num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= DIGITS {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mantissa), exp.abs())
    } else {
        trim(&format!("{:.*}", (DIGITS - 1 - exp) as usize, x)).to_string()
    }
}

fn trim(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Joins formatted numbers with commas.
pub fn row(values: &[f64]) -> String {
    values.iter().map(|&v| num(v)).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g() {
        assert_eq!(num(1.0), "1");
        assert_eq!(num(0.0), "0");
        assert_eq!(num(-0.0), "0");
        assert_eq!(num(1e-5), "1e-05");
        assert_eq!(num(1e-4), "0.0001");
        assert_eq!(num(1.618033988749895), "1.61803398875");
        assert_eq!(num(0.20751874963942), "0.207518749639");
        assert_eq!(num(123456789012.0), "123456789012");
        assert_eq!(num(1234567890123.0), "1.23456789012e+12");
        assert_eq!(num(-2.5), "-2.5");
        assert_eq!(num(9.9999999999999e-5), "0.0001");
        assert_eq!(num(1e300), "1e+300");
        assert_eq!(row(&[1.0, 0.5, 3.0]), "1,0.5,3");
    }
}
