//! Accounts, sessions and the append-only `accounts.jnl` journal.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PlatformError;

pub const JOURNAL_HEADER: &str = "# accounts v1 hash=sha256";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AccountRole {
    Customer,
    Provider,
}

impl AccountRole {
    pub fn as_str(self) -> &'static str {
        match self {
            AccountRole::Customer => "customer",
            AccountRole::Provider => "provider",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "customer" => Some(AccountRole::Customer),
            "provider" => Some(AccountRole::Provider),
            _ => None,
        }
    }

    /// Id of the assistant agent representing `login`.
    pub fn agent_id(self, login: &str) -> String {
        format!("{}-{login}", self.as_str())
    }
}

impl fmt::Display for AccountRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Profile {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub contact: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Account {
    pub account_id: String,
    pub login: String,
    pub role: AccountRole,
    pub salt: Vec<u8>,
    pub credential: Vec<u8>,
    pub profile: Profile,
    pub agent_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub account_id: String,
    pub opened_at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
enum JournalRecord {
    Created {
        account_id: String,
        login: String,
        role: AccountRole,
        salt: String,
        hash: String,
        profile: Profile,
    },
    CredentialRotated {
        account_id: String,
        salt: String,
        hash: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuthFailure {
    UnknownUser,
    WrongCredentials,
}

fn digest(salt: &[u8], password: &str) -> Vec<u8> {
    let mut h = Sha256::new();
    h.update(salt);
    h.update(password.as_bytes());
    h.finalize().to_vec()
}

/// Account store owned by the administrator agent.
#[derive(Debug)]
pub struct AccountStore {
    accounts: BTreeMap<String, Account>,
    by_login: BTreeMap<String, String>,
    sessions: BTreeMap<String, Session>,
    next_account: u64,
    next_session: u64,
    rng: ChaCha8Rng,
    journal: Option<PathBuf>,
}

impl AccountStore {
    pub fn new(seed: u64) -> Self {
        Self {
            accounts: BTreeMap::new(),
            by_login: BTreeMap::new(),
            sessions: BTreeMap::new(),
            next_account: 0,
            next_session: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            journal: None,
        }
    }

    /// Replays `path` if it exists and appends later events to it.
    pub fn open(path: &Path, seed: u64) -> Result<Self, PlatformError> {
        let mut store = Self::new(seed);
        if path.exists() {
            let text = fs::read_to_string(path)?;
            for (i, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() {
                    continue;
                }
                if line.starts_with('#') {
                    if i == 0 && line != JOURNAL_HEADER {
                        return Err(PlatformError::Journal(format!("unsupported journal header `{line}`")));
                    }
                    continue;
                }
                let record: JournalRecord =
                    serde_json::from_str(line).map_err(|e| PlatformError::Journal(format!("line {}: {e}", i + 1)))?;
                store.replay(record)?;
            }
        } else {
            if let Some(dir) = path.parent() {
                fs::create_dir_all(dir)?;
            }
            fs::write(path, format!("{JOURNAL_HEADER}\n"))?;
        }
        store.journal = Some(path.to_path_buf());
        Ok(store)
    }

    fn replay(&mut self, record: JournalRecord) -> Result<(), PlatformError> {
        let bad = |e: hex::FromHexError| PlatformError::Journal(e.to_string());
        match record {
            JournalRecord::Created {
                account_id,
                login,
                role,
                salt,
                hash,
                profile,
            } => {
                if let Some(n) = account_id.strip_prefix("acc-").and_then(|n| n.parse::<u64>().ok()) {
                    self.next_account = self.next_account.max(n);
                }
                self.by_login.insert(login.clone(), account_id.clone());
                self.accounts.insert(
                    account_id.clone(),
                    Account {
                        agent_id: role.agent_id(&login),
                        account_id,
                        login,
                        role,
                        salt: hex::decode(salt).map_err(bad)?,
                        credential: hex::decode(hash).map_err(bad)?,
                        profile,
                    },
                );
            }
            JournalRecord::CredentialRotated { account_id, salt, hash } => {
                let acc = self
                    .accounts
                    .get_mut(&account_id)
                    .ok_or_else(|| PlatformError::Journal(format!("rotation for unknown account {account_id}")))?;
                acc.salt = hex::decode(salt).map_err(bad)?;
                acc.credential = hex::decode(hash).map_err(bad)?;
            }
        }
        Ok(())
    }

    fn append(&self, record: &JournalRecord) -> Result<(), PlatformError> {
        if let Some(path) = &self.journal {
            let mut f = OpenOptions::new().append(true).open(path)?;
            let line = serde_json::to_string(record).map_err(|e| PlatformError::Journal(e.to_string()))?;
            writeln!(f, "{line}")?;
        }
        Ok(())
    }

    fn fresh_salt(&mut self) -> Vec<u8> {
        let mut salt = vec![0u8; 16];
        self.rng.fill_bytes(&mut salt);
        salt
    }

    pub fn len(&self) -> usize {
        self.accounts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accounts.is_empty()
    }

    pub fn accounts(&self) -> impl Iterator<Item = &Account> {
        self.accounts.values()
    }

    pub fn get(&self, account_id: &str) -> Option<&Account> {
        self.accounts.get(account_id)
    }

    pub fn by_login(&self, login: &str) -> Option<&Account> {
        self.by_login.get(login).and_then(|id| self.accounts.get(id))
    }

    pub fn create(
        &mut self,
        login: &str,
        password: &str,
        role: AccountRole,
        profile: Profile,
    ) -> Result<&Account, PlatformError> {
        if login.is_empty() || login.contains(char::is_whitespace) {
            return Err(PlatformError::InvalidRequest(format!("invalid login `{login}`")));
        }
        if self.by_login.contains_key(login) {
            return Err(PlatformError::DuplicateLogin(login.to_string()));
        }
        let salt = self.fresh_salt();
        let credential = digest(&salt, password);
        self.next_account += 1;
        let account_id = format!("acc-{:06}", self.next_account);
        let record = JournalRecord::Created {
            account_id: account_id.clone(),
            login: login.to_string(),
            role,
            salt: hex::encode(&salt),
            hash: hex::encode(&credential),
            profile: profile.clone(),
        };
        self.append(&record)?;
        self.by_login.insert(login.to_string(), account_id.clone());
        self.accounts.insert(
            account_id.clone(),
            Account {
                account_id: account_id.clone(),
                login: login.to_string(),
                role,
                salt,
                credential,
                profile,
                agent_id: role.agent_id(login),
            },
        );
        Ok(&self.accounts[&account_id])
    }

    /// Checks the credential triple. The role is part of the credential.
    pub fn verify(&self, login: &str, password: &str, role: AccountRole) -> Result<&Account, AuthFailure> {
        let acc = self.by_login(login).ok_or(AuthFailure::UnknownUser)?;
        if acc.role != role || digest(&acc.salt, password) != acc.credential {
            return Err(AuthFailure::WrongCredentials);
        }
        Ok(acc)
    }

    pub fn rotate(&mut self, login: &str, old: &str, new: &str) -> Result<String, PlatformError> {
        let role = self
            .by_login(login)
            .map(|a| a.role)
            .ok_or_else(|| PlatformError::UnknownUser(login.to_string()))?;
        let account_id = self
            .verify(login, old, role)
            .map_err(|_| PlatformError::WrongCredentials)?
            .account_id
            .clone();
        let salt = self.fresh_salt();
        let credential = digest(&salt, new);
        self.append(&JournalRecord::CredentialRotated {
            account_id: account_id.clone(),
            salt: hex::encode(&salt),
            hash: hex::encode(&credential),
        })?;
        let acc = self.accounts.get_mut(&account_id).expect("verified");
        acc.salt = salt;
        acc.credential = credential;
        Ok(account_id)
    }

    /// Opens a session, closing any earlier one for the account.
    pub fn open_session(&mut self, account_id: &str, now: u64) -> Session {
        self.next_session += 1;
        let session = Session {
            session_id: format!("sess-{:06}", self.next_session),
            account_id: account_id.to_string(),
            opened_at: now,
        };
        self.sessions.insert(account_id.to_string(), session.clone());
        session
    }

    pub fn session(&self, account_id: &str) -> Option<&Session> {
        self.sessions.get(account_id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn credentials_are_salted_hashes() {
        let mut s = AccountStore::new(0);
        let acc = s
            .create("acme", "pw", AccountRole::Customer, Profile::default())
            .unwrap()
            .clone();
        assert_eq!(acc.account_id, "acc-000001");
        assert_ne!(acc.credential, b"pw".to_vec());
        assert_eq!(acc.credential.len(), 32);
        assert!(s.verify("acme", "pw", AccountRole::Customer).is_ok());
        assert_eq!(
            s.verify("acme", "nope", AccountRole::Customer),
            Err(AuthFailure::WrongCredentials)
        );
        assert_eq!(
            s.verify("acme", "pw", AccountRole::Provider),
            Err(AuthFailure::WrongCredentials)
        );
        assert_eq!(
            s.verify("ghost", "pw", AccountRole::Customer),
            Err(AuthFailure::UnknownUser)
        );
    }

    #[test]
    fn same_password_different_salt() {
        let mut s = AccountStore::new(0);
        let a = s
            .create("a", "pw", AccountRole::Customer, Profile::default())
            .unwrap()
            .credential
            .clone();
        let b = s
            .create("b", "pw", AccountRole::Customer, Profile::default())
            .unwrap()
            .credential
            .clone();
        assert_ne!(a, b);
    }

    #[test]
    fn duplicate_login() {
        let mut s = AccountStore::new(0);
        s.create("a", "pw", AccountRole::Customer, Profile::default()).unwrap();
        assert!(matches!(
            s.create("a", "x", AccountRole::Provider, Profile::default()),
            Err(PlatformError::DuplicateLogin(_))
        ));
    }

    #[test]
    fn one_live_session_per_account() {
        let mut s = AccountStore::new(0);
        s.create("a", "pw", AccountRole::Customer, Profile::default()).unwrap();
        let first = s.open_session("acc-000001", 1);
        let second = s.open_session("acc-000001", 2);
        assert_ne!(first.session_id, second.session_id);
        assert_eq!(s.session("acc-000001"), Some(&second));
    }

    #[test]
    fn journal_replay() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("accounts.jnl");
        {
            let mut s = AccountStore::open(&path, 7).unwrap();
            s.create("acme", "pw", AccountRole::Customer, Profile::default())
                .unwrap();
            s.create("portco", "pw2", AccountRole::Provider, Profile::default())
                .unwrap();
            s.rotate("acme", "pw", "new").unwrap();
        }
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(JOURNAL_HEADER));
        assert!(!text.contains("\"pw\""));
        let mut s = AccountStore::open(&path, 7).unwrap();
        assert_eq!(s.len(), 2);
        assert!(s.verify("acme", "new", AccountRole::Customer).is_ok());
        assert!(s.verify("acme", "pw", AccountRole::Customer).is_err());
        let c = s
            .create("globex", "pw", AccountRole::Customer, Profile::default())
            .unwrap();
        assert_eq!(c.account_id, "acc-000003");
    }
}
