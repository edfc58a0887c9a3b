//! Predicate-evaluation contexts binding range variables to states and
//! objects.

use crate::model::{AttrRef, AttrValue, ModelError, PredContext, WarehouseObject};
use crate::temporal::TemporalDomain;

use super::AState;

fn qualifier_matches(qualifier: Option<&str>, var: Option<&str>) -> bool {
    match (qualifier, var) {
        (None, _) => true,
        (Some(q), Some(v)) => q == v,
        (Some(_), None) => false,
    }
}

/// One state bound to an optional range variable.
pub struct StateCtx<'a> {
    pub state: &'a AState,
    pub var: Option<&'a str>,
}

impl PredContext for StateCtx<'_> {
    fn attr(&self, r: &AttrRef) -> Result<AttrValue, ModelError> {
        if !qualifier_matches(r.qualifier.as_deref(), self.var) {
            return Err(ModelError::UnknownAttribute(format!(
                "unbound variable {}",
                r.qualifier.as_deref().unwrap_or_default()
            )));
        }
        r.resolve_in(&self.state.value)
    }

    fn domain(&self, qualifier: Option<&str>) -> Result<TemporalDomain, ModelError> {
        if !qualifier_matches(qualifier, self.var) {
            return Err(ModelError::UnknownAttribute(format!(
                "unbound variable {}",
                qualifier.unwrap_or_default()
            )));
        }
        Ok(self.state.domain.clone())
    }
}

/// One warehouse object; attribute references read the current value.
pub struct ObjectCtx<'a> {
    pub object: &'a WarehouseObject,
    pub var: Option<&'a str>,
    /// Closed evaluation domain of the current state.
    pub domain: TemporalDomain,
}

impl PredContext for ObjectCtx<'_> {
    fn attr(&self, r: &AttrRef) -> Result<AttrValue, ModelError> {
        if !qualifier_matches(r.qualifier.as_deref(), self.var) {
            return Err(ModelError::UnknownAttribute(format!(
                "unbound variable {}",
                r.qualifier.as_deref().unwrap_or_default()
            )));
        }
        r.resolve_in(&self.object.current.value)
    }

    fn domain(&self, qualifier: Option<&str>) -> Result<TemporalDomain, ModelError> {
        if !qualifier_matches(qualifier, self.var) {
            return Err(ModelError::UnknownAttribute(format!(
                "unbound variable {}",
                qualifier.unwrap_or_default()
            )));
        }
        Ok(self.domain.clone())
    }
}

/// Two sides of a join, each bound to its range variable. Unqualified
/// references resolve left-first.
pub struct PairCtx<'a> {
    pub left: &'a AState,
    pub left_var: Option<&'a str>,
    pub right: &'a AState,
    pub right_var: Option<&'a str>,
}

impl PairCtx<'_> {
    fn side(&self, qualifier: Option<&str>) -> Option<&AState> {
        match qualifier {
            None => Some(self.left),
            Some(q) => {
                if self.left_var == Some(q) {
                    Some(self.left)
                } else if self.right_var == Some(q) {
                    Some(self.right)
                } else {
                    None
                }
            }
        }
    }
}

impl PredContext for PairCtx<'_> {
    fn attr(&self, r: &AttrRef) -> Result<AttrValue, ModelError> {
        match self.side(r.qualifier.as_deref()) {
            Some(state) => match r.resolve_in(&state.value) {
                // unqualified names may live on the right side
                Err(ModelError::UnknownAttribute(_)) if r.qualifier.is_none() => {
                    r.resolve_in(&self.right.value)
                }
                other => other,
            },
            None => Err(ModelError::UnknownAttribute(format!(
                "unbound variable {}",
                r.qualifier.as_deref().unwrap_or_default()
            ))),
        }
    }

    fn domain(&self, qualifier: Option<&str>) -> Result<TemporalDomain, ModelError> {
        match self.side(qualifier) {
            Some(state) => Ok(state.domain.clone()),
            None => Err(ModelError::UnknownAttribute(format!(
                "unbound variable {}",
                qualifier.unwrap_or_default()
            ))),
        }
    }
}
