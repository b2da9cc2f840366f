//! API keys: issuance by an admin credential, salted-hash storage, and
//! constant-time verification.
//!
//! A key's printable form is `tsk_<key id>_<secret>` with a 128-bit
//! random secret. Only `sha256(salt || secret)` is stored; the plaintext
//! is returned exactly once at issuance.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use parking_lot::RwLock;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

const KEY_PREFIX: &str = "tsk";
const ADMIN_PREFIX: &str = "tsa";

#[derive(Debug, Error)]
pub enum AuthError {
    #[error("invalid admin credential")]
    InvalidAdmin,
    #[error("unknown key id '{0}'")]
    UnknownKey(String),
    #[error("key store I/O failed on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("key store at {path} is corrupt: {detail}")]
    Corrupt { path: PathBuf, detail: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApiKeyRecord {
    pub key_id: String,
    pub owner: String,
    salt: String,
    hash: String,
    pub created_at: DateTime<Utc>,
    pub revoked: bool,
}

/// A freshly issued key; the only moment the plaintext exists.
#[derive(Debug, Clone)]
pub struct IssuedKey {
    pub key_id: String,
    pub owner: String,
    pub plaintext: String,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct KeyData {
    keys: HashMap<String, ApiKeyRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct AdminData {
    salt: String,
    hash: String,
}

pub struct KeyStore {
    keys_path: PathBuf,
    admin_path: PathBuf,
    data: RwLock<KeyData>,
    admin: RwLock<Option<AdminData>>,
}

impl KeyStore {
    /// Opens (or starts) the key store under the data directory.
    pub fn open(root: &Path) -> Result<Self, AuthError> {
        let keys_path = root.join("keys.json");
        let admin_path = root.join("admin.json");
        let data = match fs::read_to_string(&keys_path) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| AuthError::Corrupt {
                path: keys_path.clone(),
                detail: e.to_string(),
            })?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => KeyData::default(),
            Err(source) => {
                return Err(AuthError::Io {
                    path: keys_path,
                    source,
                })
            }
        };
        let admin = match fs::read_to_string(&admin_path) {
            Ok(text) => Some(serde_json::from_str(&text).map_err(|e| AuthError::Corrupt {
                path: admin_path.clone(),
                detail: e.to_string(),
            })?),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
            Err(source) => {
                return Err(AuthError::Io {
                    path: admin_path,
                    source,
                })
            }
        };
        Ok(KeyStore {
            keys_path,
            admin_path,
            data: RwLock::new(data),
            admin: RwLock::new(admin),
        })
    }

    /// Creates the admin credential on first use and returns its
    /// plaintext exactly once; later calls return `None`.
    pub fn ensure_admin(&self) -> Result<Option<String>, AuthError> {
        let mut admin = self.admin.write();
        if admin.is_some() {
            return Ok(None);
        }
        let token = format!("{ADMIN_PREFIX}_{}", hex_random(16));
        let salt = hex_random(16);
        let data = AdminData {
            hash: salted_hash(&salt, &token),
            salt,
        };
        write_atomic(&self.admin_path, &serde_json::to_vec_pretty(&data).unwrap())?;
        *admin = Some(data);
        Ok(Some(token))
    }

    pub fn has_admin(&self) -> bool {
        self.admin.read().is_some()
    }

    pub fn verify_admin(&self, token: &str) -> bool {
        match self.admin.read().as_ref() {
            Some(admin) => constant_time_eq(&salted_hash(&admin.salt, token), &admin.hash),
            None => false,
        }
    }

    /// Issues a new key for `owner`. Requires the admin credential.
    pub fn issue(&self, admin_token: &str, owner: &str) -> Result<IssuedKey, AuthError> {
        if !self.verify_admin(admin_token) {
            return Err(AuthError::InvalidAdmin);
        }
        let key_id = hex_random(8);
        let secret = hex_random(16);
        let plaintext = format!("{KEY_PREFIX}_{key_id}_{secret}");
        let salt = hex_random(16);
        let record = ApiKeyRecord {
            key_id: key_id.clone(),
            owner: owner.to_string(),
            hash: salted_hash(&salt, &plaintext),
            salt,
            created_at: Utc::now(),
            revoked: false,
        };
        {
            let mut data = self.data.write();
            data.keys.insert(key_id.clone(), record);
            self.persist(&data)?;
        }
        Ok(IssuedKey {
            key_id,
            owner: owner.to_string(),
            plaintext,
        })
    }

    /// Revokes a key by id. Requires the admin credential.
    pub fn revoke(&self, admin_token: &str, key_id: &str) -> Result<(), AuthError> {
        if !self.verify_admin(admin_token) {
            return Err(AuthError::InvalidAdmin);
        }
        let mut data = self.data.write();
        let record = data
            .keys
            .get_mut(key_id)
            .ok_or_else(|| AuthError::UnknownKey(key_id.to_string()))?;
        record.revoked = true;
        self.persist(&data)
    }

    /// Verifies a presented key. Revoked and unknown keys never
    /// authenticate; the comparison is constant-time, with a dummy hash
    /// burned for unknown key ids.
    pub fn authenticate(&self, presented: &str) -> Option<ApiKeyRecord> {
        let mut parts = presented.trim().splitn(3, '_');
        let (prefix, key_id) = (parts.next()?, parts.next()?);
        parts.next()?;
        if prefix != KEY_PREFIX {
            return None;
        }
        let data = self.data.read();
        match data.keys.get(key_id) {
            Some(record) => {
                let matches =
                    constant_time_eq(&salted_hash(&record.salt, presented), &record.hash);
                (matches && !record.revoked).then(|| record.clone())
            }
            None => {
                // Equalize timing with the known-id path.
                let _ = salted_hash("0000", presented);
                None
            }
        }
    }

    pub fn key_count(&self) -> usize {
        self.data.read().keys.len()
    }

    fn persist(&self, data: &KeyData) -> Result<(), AuthError> {
        write_atomic(&self.keys_path, &serde_json::to_vec_pretty(data).unwrap())
    }
}

fn hex_random(bytes: usize) -> String {
    let mut buf = vec![0u8; bytes];
    rand::rng().fill_bytes(&mut buf);
    hex_encode(&buf)
}

fn hex_encode(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn salted_hash(salt: &str, value: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(salt.as_bytes());
    hasher.update(value.as_bytes());
    hex_encode(&hasher.finalize())
}

/// Byte-wise constant-time equality over the hex digests.
fn constant_time_eq(a: &str, b: &str) -> bool {
    let (a, b) = (a.as_bytes(), b.as_bytes());
    if a.len() != b.len() {
        return false;
    }
    let mut diff = 0u8;
    for (x, y) in a.iter().zip(b) {
        diff |= x ^ y;
    }
    diff == 0
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), AuthError> {
    let io_err = |source| AuthError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = path.parent().expect("key store paths have parents");
    fs::create_dir_all(dir).map_err(io_err)?;
    let tmp = dir.join(format!(".tmp-keys-{}", std::process::id()));
    let mut file = fs::File::create(&tmp).map_err(io_err)?;
    file.write_all(bytes).map_err(io_err)?;
    file.sync_all().map_err(io_err)?;
    drop(file);
    fs::rename(&tmp, path).map_err(io_err)
}
