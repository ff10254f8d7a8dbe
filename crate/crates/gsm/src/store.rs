//! Service state storage: one file per instance named `{class}.{id}` and one
//! `{class}.counter` file holding the next id to allocate.

use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

#[derive(Debug)]
pub struct InstanceStore {
    dir: PathBuf,
    allocation: Mutex<()>,
    locks: Mutex<HashMap<(String, u64), Arc<Mutex<()>>>>,
}

impl InstanceStore {
    pub fn open(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            allocation: Mutex::new(()),
            locks: Mutex::new(HashMap::new()),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn instance_path(&self, class: &str, id: u64) -> PathBuf {
        self.dir.join(format!("{class}.{id}"))
    }

    /// Next id for `class`; ids are never reused, also across restarts.
    pub fn allocate(&self, class: &str) -> io::Result<u64> {
        let _guard = self.allocation.lock().unwrap_or_else(|e| e.into_inner());
        let counter = self.dir.join(format!("{class}.counter"));
        let next = match fs::read_to_string(&counter) {
            Ok(text) => text
                .trim()
                .parse::<u64>()
                .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("{}: {e}", counter.display())))?,
            Err(e) if e.kind() == io::ErrorKind::NotFound => 0,
            Err(e) => return Err(e),
        };
        write_atomic(&counter, (next + 1).to_string().as_bytes())?;
        Ok(next)
    }

    pub fn save(&self, class: &str, id: u64, blob: &[u8]) -> io::Result<()> {
        write_atomic(&self.instance_path(class, id), blob)
    }

    pub fn load(&self, class: &str, id: u64) -> io::Result<Option<Vec<u8>>> {
        match fs::read(self.instance_path(class, id)) {
            Ok(b) => Ok(Some(b)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Mutex serializing invocations on one instance.
    pub fn lock(&self, class: &str, id: u64) -> Arc<Mutex<()>> {
        let mut locks = self.locks.lock().unwrap_or_else(|e| e.into_inner());
        locks.entry((class.to_string(), id)).or_default().clone()
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{:?}", std::thread::current().id()).replace(['(', ')'], ""));
    let tmp = PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}
