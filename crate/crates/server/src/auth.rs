// SPDX-License-Identifier: Apache-2.0

//! Static bearer tokens mapped to a user id and a role.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use axum::extract::FromRequestParts;
use axum::http::request::Parts;
use axum::http::{header, StatusCode};

use crate::api::{ApiError, AppState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Student,
    Instructor,
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "student" => Ok(Role::Student),
            "instructor" => Ok(Role::Instructor),
            other => Err(format!("unknown role `{other}`; expected student or instructor")),
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Student => "student",
            Role::Instructor => "instructor",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Principal {
    pub user_id: String,
    pub role: Role,
}

#[derive(Debug, Clone, Default)]
pub struct TokenTable {
    tokens: HashMap<String, Principal>,
}

impl TokenTable {
    pub fn new() -> TokenTable {
        TokenTable::default()
    }

    pub fn insert(&mut self, token: impl Into<String>, user_id: impl Into<String>, role: Role) {
        self.tokens.insert(
            token.into(),
            Principal {
                user_id: user_id.into(),
                role,
            },
        );
    }

    /// Parses `token=user:role` entries separated by commas or newlines.
    ///
    /// ```
    /// use qlearn_server::auth::{Role, TokenTable};
    /// let t = TokenTable::parse("abc=alice:student, xyz=prof:instructor").unwrap();
    /// assert_eq!(t.lookup("xyz").unwrap().role, Role::Instructor);
    /// ```
    pub fn parse(spec: &str) -> Result<TokenTable, String> {
        let mut table = TokenTable::new();
        for entry in spec
            .split([',', '\n'])
            .map(str::trim)
            .filter(|e| !e.is_empty() && !e.starts_with('#'))
        {
            let (token, rest) = entry
                .split_once('=')
                .ok_or_else(|| format!("token entry `{entry}` is not token=user:role"))?;
            let (user, role) = rest
                .split_once(':')
                .ok_or_else(|| format!("token entry `{entry}` is not token=user:role"))?;
            if token.trim().is_empty() || user.trim().is_empty() {
                return Err(format!("token entry `{entry}` has an empty token or user"));
            }
            table.insert(token.trim(), user.trim(), role.trim().parse()?);
        }
        Ok(table)
    }

    pub fn lookup(&self, token: &str) -> Option<&Principal> {
        self.tokens.get(token)
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

impl FromRequestParts<AppState> for Principal {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &AppState) -> Result<Self, Self::Rejection> {
        let value = parts
            .headers
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .ok_or_else(|| ApiError::new(StatusCode::UNAUTHORIZED, "missing bearer token"))?;
        let token = value
            .strip_prefix("Bearer ")
            .ok_or_else(|| ApiError::new(StatusCode::UNAUTHORIZED, "authorization must be a bearer token"))?;
        state
            .tokens
            .lookup(token.trim())
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::UNAUTHORIZED, "unknown token"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_errors() {
        assert!(TokenTable::parse("abc").is_err());
        assert!(TokenTable::parse("abc=alice").is_err());
        assert!(TokenTable::parse("abc=alice:admin").is_err());
        assert!(TokenTable::parse("=alice:student").is_err());
        let t = TokenTable::parse("# comment\nabc=alice:student\n").unwrap();
        assert_eq!(t.lookup("abc").unwrap().user_id, "alice");
        assert!(TokenTable::parse("").unwrap().is_empty());
    }
}
