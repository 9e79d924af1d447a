//! Numeric token values: parsing with the token's digit grouping, and
//! rendering new values in the same style.

use rust_decimal::prelude::*;
use rust_decimal::Decimal;

use crate::fpe::MoneySkeleton;

/// Parses `"5,000"`, `"6.07"`, `"1 234"` and the like. Returns the value and
/// the grouping/decimal layout to render replacements with.
pub fn parse_number(text: &str) -> Option<(Decimal, MoneySkeleton)> {
    let (skeleton, digits) = MoneySkeleton::parse(text).ok()?;
    let frac = skeleton.fraction_digits.unwrap_or(0);
    let mantissa = digits.parse::<i128>().ok()?;
    let value = Decimal::try_from_i128_with_scale(mantissa, frac as u32).ok()?;
    Some((value, skeleton))
}

/// Renders `value` rounded to the layout's decimal places and grouped like
/// the original token.
pub fn render_number(value: Decimal, style: &MoneySkeleton) -> String {
    let frac = style.fraction_digits.unwrap_or(0) as u32;
    let rounded = value.round_dp_with_strategy(frac, RoundingStrategy::MidpointAwayFromZero);
    let negative = rounded.is_sign_negative() && !rounded.is_zero();
    let mut abs = rounded.abs();
    abs.rescale(frac);
    let digits = abs.mantissa().to_string();
    let width = frac as usize + 1;
    let digits = format!("{digits:0>width$}");
    let body = style.render(&digits);
    if negative {
        format!("-{body}")
    } else {
        body
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_render_mirror_style() {
        let (v, style) = parse_number("5,000").unwrap();
        assert_eq!(v, Decimal::from(5000));
        assert_eq!(render_number(Decimal::from(62400), &style), "62,400");
        assert_eq!(render_number(Decimal::from(400), &style), "400");
        let (v, style) = parse_number("6.07").unwrap();
        assert_eq!(v, Decimal::new(607, 2));
        assert_eq!(render_number(Decimal::from(7), &style), "7.00");
        assert_eq!(render_number(Decimal::new(5, 3), &style), "0.01");
        let (_, style) = parse_number("25").unwrap();
        assert_eq!(render_number(Decimal::from(2000), &style), "2000");
        assert_eq!(render_number(Decimal::from(-3), &style), "-3");
    }

    #[test]
    fn rejects_non_numbers() {
        assert!(parse_number("abc").is_none());
        assert!(parse_number("12,34").is_none());
    }
}
