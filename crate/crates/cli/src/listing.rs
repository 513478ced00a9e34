//! `families list`.

use kahler_toric::families::{ExponentialFamily, FamilyDescriptor};

use crate::config::ConfigError;

pub fn descriptors(family: Option<&str>) -> Result<Vec<FamilyDescriptor>, ConfigError> {
    match family {
        Some(spec) => {
            let f = ExponentialFamily::parse(spec).map_err(|e| ConfigError(e.to_string()))?;
            Ok(vec![f.descriptor()])
        }
        None => Ok(ExponentialFamily::catalog().iter().map(ExponentialFamily::descriptor).collect()),
    }
}

pub fn text_line(d: &FamilyDescriptor) -> String {
    let params: Vec<String> = d.parameters.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!(
        "{}: {}, dim {}{}, psi = {}, domain {}",
        d.name,
        if d.toric { "toric" } else { "not toric" },
        d.dim,
        if params.is_empty() { String::new() } else { format!(" ({})", params.join(", ")) },
        d.potential,
        d.domain
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_listing() {
        let all = descriptors(None).unwrap();
        assert_eq!(all.len(), 6);
        assert!(all.iter().map(text_line).any(|l| l.starts_with("normal-known-var: not toric")));
        let one = descriptors(Some("poisson")).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].dim, 1);
        assert!(descriptors(Some("gamma")).is_err());
    }
}
