//! Bearer tokens: `base64url(claims).hex(hmac_sha256(secret, base64url(claims)))`.

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine as _;
use hmac::{Hmac, Mac};
use serde::{Deserialize, Serialize};
use sha2::Sha256;

use aisette_core::sandbox::Glob;

type HmacSha256 = Hmac<Sha256>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claims {
    pub sub: String,
    /// Permission globs such as `endpoint:transfer` or `endpoint:*`.
    pub perms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AuthError {
    #[error("malformed token")]
    Malformed,
    #[error("token signature does not verify")]
    BadSignature,
    #[error("token permission `{0}` is not a valid glob")]
    BadPermission(String),
}

/// Who is asking, and what they may see.
#[derive(Debug, Clone)]
pub enum Caller {
    /// Authorization is switched off.
    Unchecked,
    Anonymous,
    Token { sub: String, perms: Vec<Glob> },
}

impl Caller {
    pub fn with_perms(sub: &str, perms: &[&str]) -> Result<Caller, AuthError> {
        let perms = perms
            .iter()
            .map(|p| Glob::parse(p).map_err(|_| AuthError::BadPermission(p.to_string())))
            .collect::<Result<_, _>>()?;
        Ok(Caller::Token {
            sub: sub.to_string(),
            perms,
        })
    }

    /// True when some held permission glob matches `uri`.
    pub fn holds(&self, uri: &str) -> bool {
        match self {
            Caller::Unchecked => true,
            Caller::Anonymous => false,
            Caller::Token { perms, .. } => perms.iter().any(|g| g.matches(uri)),
        }
    }

    pub fn subject(&self) -> &str {
        match self {
            Caller::Unchecked => "-",
            Caller::Anonymous => "anonymous",
            Caller::Token { sub, .. } => sub,
        }
    }
}

fn mac(secret: &str, payload: &str) -> HmacSha256 {
    let mut m = HmacSha256::new_from_slice(secret.as_bytes()).expect("hmac accepts any key length");
    m.update(payload.as_bytes());
    m
}

pub fn issue(secret: &str, claims: &Claims) -> String {
    let json = serde_json::to_vec(claims).expect("claims serialize");
    let payload = URL_SAFE_NO_PAD.encode(json);
    let sig = hex::encode(mac(secret, &payload).finalize().into_bytes());
    format!("{payload}.{sig}")
}

pub fn verify(secret: &str, token: &str) -> Result<Caller, AuthError> {
    let (payload, sig) = token.split_once('.').ok_or(AuthError::Malformed)?;
    let sig = hex::decode(sig).map_err(|_| AuthError::Malformed)?;
    mac(secret, payload).verify_slice(&sig).map_err(|_| AuthError::BadSignature)?;
    let json = URL_SAFE_NO_PAD.decode(payload).map_err(|_| AuthError::Malformed)?;
    let claims: Claims = serde_json::from_slice(&json).map_err(|_| AuthError::Malformed)?;
    let perms: Vec<&str> = claims.perms.iter().map(String::as_str).collect();
    Caller::with_perms(&claims.sub, &perms)
}
