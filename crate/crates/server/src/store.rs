//! Durable player accounts, points, shop and leaderboard.
//!
//! Layout under the data directory:
//!
//! ```text
//! players/<player_id>.json   one document per player
//! items.json                 shop catalog
//! txlog                      append-only JSON lines, one per committed change
//! ```
//!
//! A change is appended to `txlog` before the player document is rewritten.
//! Each document records the last transaction folded into it, so on open any
//! logged transaction newer than its document is applied again. A torn last
//! line (crash mid-append) is ignored because its document was never written.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use durian_core::session::PlayerId;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

const POINTS_PER_LEVEL: u64 = 10;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("email already registered")]
    EmailTaken,
    #[error("bad credentials")]
    BadCredentials,
    #[error("unknown player {0}")]
    UnknownPlayer(PlayerId),
    #[error("unknown item {0}")]
    UnknownItem(String),
    #[error("insufficient points: have {have}, need {cost}")]
    InsufficientPoints { have: u64, cost: u64 },
    #[error("missing or expired token")]
    Unauthorized,
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
    #[error("{path}: {source}")]
    Corrupt {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ItemKind {
    Merchandise,
    HeroTitle,
    EasterEgg,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShopItem {
    pub item_id: String,
    pub name: String,
    pub cost: u64,
    pub kind: ItemKind,
}

pub fn default_catalog() -> Vec<ShopItem> {
    let item = |id: &str, name: &str, cost, kind| ShopItem {
        item_id: id.into(),
        name: name.into(),
        cost,
        kind,
    };
    vec![
        item("title-hero", "Hero Title", 3, ItemKind::HeroTitle),
        item("title-guardian", "Hygiene Guardian", 10, ItemKind::HeroTitle),
        item("mask-gold", "Golden Mask", 2, ItemKind::Merchandise),
        item("soap-bubble", "Soap Bubble Trail", 5, ItemKind::Merchandise),
        item("egg-durian-king", "Durian King Egg", 8, ItemKind::EasterEgg),
    ]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct PasswordHash {
    salt: String,
    hash: String,
    iterations: u32,
}

impl PasswordHash {
    fn derive(password: &str, salt: &[u8], iterations: u32) -> String {
        let mut out = [0u8; 32];
        pbkdf2::pbkdf2_hmac::<Sha256>(password.as_bytes(), salt, iterations, &mut out);
        hex::encode(out)
    }

    fn new(password: &str, iterations: u32) -> Self {
        let mut salt = [0u8; 16];
        rand::rngs::OsRng.fill_bytes(&mut salt);
        PasswordHash {
            hash: Self::derive(password, &salt, iterations),
            salt: hex::encode(salt),
            iterations,
        }
    }

    fn verify(&self, password: &str) -> bool {
        let Ok(salt) = hex::decode(&self.salt) else {
            return false;
        };
        let candidate = Self::derive(password, &salt, self.iterations);
        // Length is fixed; compare without early exit.
        candidate
            .bytes()
            .zip(self.hash.bytes())
            .fold(candidate.len() ^ self.hash.len(), |acc, (a, b)| acc | usize::from(a ^ b))
            == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct TokenRecord {
    token_hash: String,
    expires_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerAccount {
    pub player_id: PlayerId,
    pub email: String,
    password: PasswordHash,
    pub locale: String,
    pub points_total: u64,
    pub points_lifetime: u64,
    pub level: u64,
    pub titles: BTreeSet<String>,
    pub inventory: BTreeMap<String, u32>,
    pub created_seq: u64,
    pub created_at_ms: u64,
    tokens: Vec<TokenRecord>,
    last_tx: u64,
}

impl PlayerAccount {
    fn credit(&mut self, n: u64) {
        self.points_total += n;
        self.points_lifetime += n;
        self.level = self.points_lifetime / POINTS_PER_LEVEL;
    }
}

/// Public view of an account without secrets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccountView {
    pub player_id: PlayerId,
    pub email: String,
    pub locale: String,
    pub points_total: u64,
    pub level: u64,
    pub titles: BTreeSet<String>,
    pub inventory: BTreeMap<String, u32>,
}

impl From<&PlayerAccount> for AccountView {
    fn from(a: &PlayerAccount) -> Self {
        AccountView {
            player_id: a.player_id.clone(),
            email: a.email.clone(),
            locale: a.locale.clone(),
            points_total: a.points_total,
            level: a.level,
            titles: a.titles.clone(),
            inventory: a.inventory.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    pub rank: usize,
    pub player_id: PlayerId,
    pub points_total: u64,
    pub level: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "op")]
enum TxOp {
    Register { account: PlayerAccount },
    Credit { player_id: PlayerId, n: u64 },
    Purchase { player_id: PlayerId, item: ShopItem },
    Token { player_id: PlayerId, record: TokenRecord, now_ms: u64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TxEntry {
    tx: u64,
    #[serde(flatten)]
    op: TxOp,
}

impl TxOp {
    fn player_id(&self) -> &PlayerId {
        match self {
            TxOp::Register { account } => &account.player_id,
            TxOp::Credit { player_id, .. }
            | TxOp::Purchase { player_id, .. }
            | TxOp::Token { player_id, .. } => player_id,
        }
    }

    /// Folds this change into `account`. Validation happened before logging.
    fn apply(&self, account: Option<PlayerAccount>, tx: u64) -> PlayerAccount {
        let mut a = match (self, account) {
            (TxOp::Register { account }, _) => account.clone(),
            (_, Some(a)) => a,
            (_, None) => unreachable!("change for unregistered player"),
        };
        match self {
            TxOp::Register { .. } => {}
            TxOp::Credit { n, .. } => a.credit(*n),
            TxOp::Purchase { item, .. } => {
                a.points_total -= item.cost;
                match item.kind {
                    ItemKind::HeroTitle => {
                        a.titles.insert(item.name.clone());
                    }
                    ItemKind::Merchandise | ItemKind::EasterEgg => {
                        *a.inventory.entry(item.item_id.clone()).or_default() += 1;
                    }
                }
            }
            TxOp::Token { record, now_ms, .. } => {
                a.tokens.retain(|t| t.expires_ms > *now_ms);
                a.tokens.push(record.clone());
            }
        }
        a.last_tx = tx;
        a
    }
}

#[derive(Debug, Clone)]
pub struct StoreOptions {
    /// fsync the log and documents on every commit.
    pub sync: bool,
    pub kdf_iterations: u32,
    pub token_ttl: Duration,
}

impl Default for StoreOptions {
    fn default() -> Self {
        StoreOptions {
            sync: true,
            kdf_iterations: 100_000,
            token_ttl: Duration::from_secs(30 * 24 * 3600),
        }
    }
}

struct Inner {
    players: BTreeMap<PlayerId, PlayerAccount>,
    by_email: HashMap<String, PlayerId>,
    log: File,
    next_tx: u64,
    next_created: u64,
}

pub struct PlayerStore {
    dir: PathBuf,
    opts: StoreOptions,
    catalog: Vec<ShopItem>,
    inner: Mutex<Inner>,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, StoreError> {
    let bytes = fs::read(path)?;
    serde_json::from_slice(&bytes).map_err(|source| StoreError::Corrupt {
        path: path.to_owned(),
        source,
    })
}

fn write_atomic(path: &Path, bytes: &[u8], sync: bool) -> Result<(), StoreError> {
    let tmp = path.with_extension("json.tmp");
    let mut f = File::create(&tmp)?;
    f.write_all(bytes)?;
    if sync {
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn token_hash(token: &str) -> String {
    hex::encode(Sha256::digest(token.as_bytes()))
}

impl PlayerStore {
    /// Opens (or creates) a store rooted at `dir`, replaying any logged
    /// changes that had not reached their player document.
    pub fn open(dir: impl Into<PathBuf>, opts: StoreOptions) -> Result<Self, StoreError> {
        let dir = dir.into();
        fs::create_dir_all(dir.join("players"))?;

        let items_path = dir.join("items.json");
        let catalog: Vec<ShopItem> = if items_path.exists() {
            read_json(&items_path)?
        } else {
            let catalog = default_catalog();
            write_atomic(&items_path, &serde_json::to_vec_pretty(&catalog).unwrap(), opts.sync)?;
            catalog
        };
        if catalog.iter().any(|i| i.cost == 0) {
            return Err(StoreError::InvalidInput("shop item cost must be at least 1"));
        }

        let mut players = BTreeMap::new();
        for entry in fs::read_dir(dir.join("players"))? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) == Some("json") {
                let account: PlayerAccount = read_json(&path)?;
                players.insert(account.player_id.clone(), account);
            }
        }

        let log_path = dir.join("txlog");
        let mut max_tx = players.values().map(|a| a.last_tx).max().unwrap_or(0);
        let mut repaired = BTreeSet::new();
        if log_path.exists() {
            let reader = BufReader::new(File::open(&log_path)?);
            let lines: Vec<String> = reader.lines().collect::<Result<_, _>>()?;
            let last = lines.len().saturating_sub(1);
            for (i, line) in lines.iter().enumerate() {
                let entry: TxEntry = match serde_json::from_str(line) {
                    Ok(e) => e,
                    Err(_) if i == last => break,
                    Err(source) => {
                        return Err(StoreError::Corrupt { path: log_path, source });
                    }
                };
                max_tx = max_tx.max(entry.tx);
                let id = entry.op.player_id().clone();
                let current = players.get(&id).cloned();
                if current.as_ref().map_or(0, |a| a.last_tx) < entry.tx {
                    players.insert(id.clone(), entry.op.apply(current, entry.tx));
                    repaired.insert(id);
                }
            }
            // Drop a torn tail so later appends start on a fresh line.
            let clean: String = lines
                .iter()
                .filter(|l| serde_json::from_str::<TxEntry>(l).is_ok())
                .map(|l| format!("{l}\n"))
                .collect();
            if clean.len() != fs::metadata(&log_path)?.len() as usize {
                write_atomic(&log_path, clean.as_bytes(), opts.sync)?;
            }
        }

        let store_dir = dir.clone();
        let player_path = move |id: &PlayerId| store_dir.join("players").join(format!("{id}.json"));
        for id in &repaired {
            let bytes = serde_json::to_vec_pretty(&players[id]).unwrap();
            write_atomic(&player_path(id), &bytes, opts.sync)?;
        }

        let log = OpenOptions::new().create(true).append(true).open(&log_path)?;
        let by_email = players
            .values()
            .map(|a| (a.email.to_lowercase(), a.player_id.clone()))
            .collect();
        let next_created = players.values().map(|a| a.created_seq + 1).max().unwrap_or(0);
        Ok(PlayerStore {
            dir,
            opts,
            catalog,
            inner: Mutex::new(Inner {
                players,
                by_email,
                log,
                next_tx: max_tx + 1,
                next_created,
            }),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn player_path(&self, id: &PlayerId) -> PathBuf {
        self.dir.join("players").join(format!("{id}.json"))
    }

    /// Logs and applies one change. Caller holds the lock and has validated
    /// the change against `inner`.
    fn commit(&self, inner: &mut Inner, op: TxOp) -> Result<PlayerAccount, StoreError> {
        let tx = inner.next_tx;
        let id = op.player_id().clone();
        let next = op.apply(inner.players.get(&id).cloned(), tx);
        let entry = TxEntry { tx, op };
        let mut line = serde_json::to_vec(&entry).expect("serializable");
        line.push(b'\n');
        inner.log.write_all(&line)?;
        if self.opts.sync {
            inner.log.sync_data()?;
        }
        write_atomic(
            &self.player_path(&id),
            &serde_json::to_vec_pretty(&next).unwrap(),
            self.opts.sync,
        )?;
        inner.next_tx += 1;
        inner.players.insert(id, next.clone());
        Ok(next)
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn register(
        &self,
        email: &str,
        password: &str,
        locale: &str,
    ) -> Result<AccountView, StoreError> {
        let email = email.trim();
        if email.is_empty() || !email.contains('@') {
            return Err(StoreError::InvalidInput("email"));
        }
        if password.is_empty() {
            return Err(StoreError::InvalidInput("password"));
        }
        let key = email.to_lowercase();
        if self.lock().by_email.contains_key(&key) {
            return Err(StoreError::EmailTaken);
        }
        // Hash outside the lock; it is deliberately slow.
        let password = PasswordHash::new(password, self.opts.kdf_iterations);

        let mut inner = self.lock();
        if inner.by_email.contains_key(&key) {
            return Err(StoreError::EmailTaken);
        }
        let account = PlayerAccount {
            player_id: PlayerId(uuid::Uuid::new_v4().simple().to_string()),
            email: email.to_owned(),
            password,
            locale: if locale.is_empty() { "en".into() } else { locale.into() },
            points_total: 0,
            points_lifetime: 0,
            level: 0,
            titles: BTreeSet::new(),
            inventory: BTreeMap::new(),
            created_seq: inner.next_created,
            created_at_ms: now_ms(),
            tokens: Vec::new(),
            last_tx: 0,
        };
        let account = self.commit(&mut inner, TxOp::Register { account })?;
        inner.next_created += 1;
        inner.by_email.insert(key, account.player_id.clone());
        Ok(AccountView::from(&account))
    }

    /// Issues a fresh session token. Unknown email and wrong password fail
    /// identically.
    pub fn login(&self, email: &str, password: &str) -> Result<String, StoreError> {
        let key = email.trim().to_lowercase();
        let account = {
            let inner = self.lock();
            inner
                .by_email
                .get(&key)
                .and_then(|id| inner.players.get(id))
                .cloned()
        };
        let verified = match &account {
            Some(a) => a.password.verify(password),
            None => {
                // Spend the same effort for unknown emails.
                PasswordHash::new(password, self.opts.kdf_iterations);
                false
            }
        };
        let account = account.filter(|_| verified).ok_or(StoreError::BadCredentials)?;

        let mut raw = [0u8; 32];
        rand::rngs::OsRng.fill_bytes(&mut raw);
        let token = hex::encode(raw);
        let now = now_ms();
        let record = TokenRecord {
            token_hash: token_hash(&token),
            expires_ms: now + self.opts.token_ttl.as_millis() as u64,
        };
        let mut inner = self.lock();
        self.commit(
            &mut inner,
            TxOp::Token { player_id: account.player_id, record, now_ms: now },
        )?;
        Ok(token)
    }

    pub fn authenticate(&self, token: &str) -> Result<PlayerId, StoreError> {
        self.authenticate_at(token, now_ms())
    }

    pub fn authenticate_at(&self, token: &str, now_ms: u64) -> Result<PlayerId, StoreError> {
        let hash = token_hash(token);
        let inner = self.lock();
        inner
            .players
            .values()
            .find(|a| a.tokens.iter().any(|t| t.token_hash == hash && t.expires_ms > now_ms))
            .map(|a| a.player_id.clone())
            .ok_or(StoreError::Unauthorized)
    }

    pub fn account(&self, id: &PlayerId) -> Result<AccountView, StoreError> {
        let inner = self.lock();
        inner
            .players
            .get(id)
            .map(AccountView::from)
            .ok_or_else(|| StoreError::UnknownPlayer(id.clone()))
    }

    /// Adds points; returns once the change is on disk.
    pub fn credit_points(&self, id: &PlayerId, n: u64) -> Result<AccountView, StoreError> {
        if n == 0 {
            return Err(StoreError::InvalidInput("credit must be positive"));
        }
        let mut inner = self.lock();
        if !inner.players.contains_key(id) {
            return Err(StoreError::UnknownPlayer(id.clone()));
        }
        let account = self.commit(&mut inner, TxOp::Credit { player_id: id.clone(), n })?;
        Ok(AccountView::from(&account))
    }

    pub fn catalog(&self) -> &[ShopItem] {
        &self.catalog
    }

    pub fn purchase(&self, id: &PlayerId, item_id: &str) -> Result<AccountView, StoreError> {
        let item = self
            .catalog
            .iter()
            .find(|i| i.item_id == item_id)
            .cloned()
            .ok_or_else(|| StoreError::UnknownItem(item_id.to_owned()))?;
        let mut inner = self.lock();
        let have = inner
            .players
            .get(id)
            .ok_or_else(|| StoreError::UnknownPlayer(id.clone()))?
            .points_total;
        if have < item.cost {
            return Err(StoreError::InsufficientPoints { have, cost: item.cost });
        }
        let account = self.commit(&mut inner, TxOp::Purchase { player_id: id.clone(), item })?;
        Ok(AccountView::from(&account))
    }

    /// Players by points, highest first; ties go to the older account.
    pub fn leaderboard(&self, top_n: usize) -> Vec<LeaderboardEntry> {
        let inner = self.lock();
        let mut rows: Vec<&PlayerAccount> = inner.players.values().collect();
        rows.sort_by(|a, b| {
            b.points_total
                .cmp(&a.points_total)
                .then(a.created_seq.cmp(&b.created_seq))
        });
        rows.into_iter()
            .take(top_n)
            .enumerate()
            .map(|(i, a)| LeaderboardEntry {
                rank: i + 1,
                player_id: a.player_id.clone(),
                points_total: a.points_total,
                level: a.level,
            })
            .collect()
    }

    pub fn player_count(&self) -> usize {
        self.lock().players.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fast() -> StoreOptions {
        StoreOptions { sync: false, kdf_iterations: 10, ..StoreOptions::default() }
    }

    fn store() -> (tempfile::TempDir, PlayerStore) {
        let dir = tempfile::tempdir().unwrap();
        let s = PlayerStore::open(dir.path(), fast()).unwrap();
        (dir, s)
    }

    #[test]
    fn register_and_login() {
        let (_d, s) = store();
        let a = s.register("Ann@Example.org", "pw", "it").unwrap();
        let token = s.login("ann@example.org", "pw").unwrap();
        assert_eq!(s.authenticate(&token).unwrap(), a.player_id);
        assert!(matches!(s.authenticate("nope"), Err(StoreError::Unauthorized)));
    }

    #[test]
    fn bad_credentials_are_indistinguishable() {
        let (_d, s) = store();
        s.register("a@b.c", "pw", "en").unwrap();
        let wrong = s.login("a@b.c", "other").unwrap_err();
        let unknown = s.login("x@b.c", "pw").unwrap_err();
        assert_eq!(wrong.to_string(), unknown.to_string());
        assert!(matches!(wrong, StoreError::BadCredentials));
    }

    #[test]
    fn email_is_case_insensitive() {
        let (_d, s) = store();
        s.register("a@b.c", "pw", "en").unwrap();
        assert!(matches!(s.register("A@B.C", "pw", "en"), Err(StoreError::EmailTaken)));
    }

    #[test]
    fn tokens_expire() {
        let (_d, s) = store();
        s.register("a@b.c", "pw", "en").unwrap();
        let t = s.login("a@b.c", "pw").unwrap();
        let later = now_ms() + 31 * 24 * 3600 * 1000;
        assert!(matches!(s.authenticate_at(&t, later), Err(StoreError::Unauthorized)));
    }

    #[test]
    fn password_is_not_stored_in_clear() {
        let (d, s) = store();
        let a = s.register("a@b.c", "hunter2-secret", "en").unwrap();
        let doc = fs::read_to_string(d.path().join("players").join(format!("{}.json", a.player_id)))
            .unwrap();
        assert!(!doc.contains("hunter2-secret"));
        let log = fs::read_to_string(d.path().join("txlog")).unwrap();
        assert!(!log.contains("hunter2-secret"));
    }

    #[test]
    fn credit_and_level() {
        let (_d, s) = store();
        let id = s.register("a@b.c", "pw", "en").unwrap().player_id;
        assert_eq!(s.credit_points(&id, 1).unwrap().points_total, 1);
        for _ in 0..9 {
            s.credit_points(&id, 1).unwrap();
        }
        let a = s.account(&id).unwrap();
        assert_eq!((a.points_total, a.level), (10, 1));
        assert!(matches!(
            s.credit_points(&PlayerId("ghost".into()), 1),
            Err(StoreError::UnknownPlayer(_))
        ));
    }

    #[test]
    fn purchase_rules() {
        let (_d, s) = store();
        let id = s.register("a@b.c", "pw", "en").unwrap().player_id;
        s.credit_points(&id, 5).unwrap();
        let a = s.purchase(&id, "title-hero").unwrap();
        assert_eq!(a.points_total, 2);
        assert!(a.titles.contains("Hero Title"));
        assert!(matches!(
            s.purchase(&id, "title-hero"),
            Err(StoreError::InsufficientPoints { have: 2, cost: 3 })
        ));
        assert_eq!(s.account(&id).unwrap(), a);
        assert!(matches!(s.purchase(&id, "nope"), Err(StoreError::UnknownItem(_))));
        // Spending keeps the level earned.
        s.credit_points(&id, 8).unwrap();
        let a = s.purchase(&id, "egg-durian-king").unwrap();
        assert_eq!((a.points_total, a.level), (2, 1));
        assert_eq!(a.inventory["egg-durian-king"], 1);
    }

    #[test]
    fn leaderboard_ties_by_age() {
        let (_d, s) = store();
        let a = s.register("a@x.y", "pw", "en").unwrap().player_id;
        let b = s.register("b@x.y", "pw", "en").unwrap().player_id;
        let c = s.register("c@x.y", "pw", "en").unwrap().player_id;
        assert_eq!(s.leaderboard(10).len(), 3);
        s.credit_points(&c, 3).unwrap();
        s.credit_points(&b, 3).unwrap();
        s.credit_points(&a, 5).unwrap();
        let board = s.leaderboard(10);
        let order: Vec<_> = board.iter().map(|e| (e.rank, e.player_id.clone())).collect();
        assert_eq!(order, vec![(1, a), (2, b), (3, c)]);
        assert_eq!(s.leaderboard(1).len(), 1);
    }

    #[test]
    fn empty_leaderboard() {
        let (_d, s) = store();
        assert!(s.leaderboard(10).is_empty());
    }

    #[test]
    fn reopen_preserves_state() {
        let dir = tempfile::tempdir().unwrap();
        let (id, token) = {
            let s = PlayerStore::open(dir.path(), fast()).unwrap();
            let id = s.register("a@b.c", "pw", "en").unwrap().player_id;
            s.credit_points(&id, 7).unwrap();
            s.purchase(&id, "mask-gold").unwrap();
            (id, s.login("a@b.c", "pw").unwrap())
        };
        let s = PlayerStore::open(dir.path(), fast()).unwrap();
        let a = s.account(&id).unwrap();
        assert_eq!(a.points_total, 5);
        assert_eq!(a.inventory["mask-gold"], 1);
        assert_eq!(s.authenticate(&token).unwrap(), id);
        assert!(matches!(s.register("A@b.c", "pw", "en"), Err(StoreError::EmailTaken)));
    }

    #[test]
    fn replays_log_ahead_of_documents() {
        let dir = tempfile::tempdir().unwrap();
        let id = {
            let s = PlayerStore::open(dir.path(), fast()).unwrap();
            let id = s.register("a@b.c", "pw", "en").unwrap().player_id;
            s.credit_points(&id, 4).unwrap();
            id
        };
        // Crash after the log append but before the document write: roll
        // the document back to its state before the credit.
        let doc_path = dir.path().join("players").join(format!("{id}.json"));
        let mut doc: PlayerAccount = read_json(&doc_path).unwrap();
        doc.points_total = 0;
        doc.points_lifetime = 0;
        doc.last_tx -= 1;
        fs::write(&doc_path, serde_json::to_vec(&doc).unwrap()).unwrap();
        // And a torn half-line at the end of the log.
        let mut log = OpenOptions::new().append(true).open(dir.path().join("txlog")).unwrap();
        log.write_all(b"{\"tx\":99,\"op\":\"Cre").unwrap();
        drop(log);

        let s = PlayerStore::open(dir.path(), fast()).unwrap();
        assert_eq!(s.account(&id).unwrap().points_total, 4);
        s.credit_points(&id, 1).unwrap();
        drop(s);
        let s = PlayerStore::open(dir.path(), fast()).unwrap();
        assert_eq!(s.account(&id).unwrap().points_total, 5);
    }
}
