//! TCP front end: one thread per connection, the platform behind a mutex.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};

use coopnet_core::platform::Platform;

use crate::protocol::{failure, handle_line};

pub type Shared = Arc<Mutex<Platform>>;

pub struct Server {
    listener: TcpListener,
    platform: Shared,
}

impl Server {
    pub fn bind(addr: impl ToSocketAddrs, platform: Platform) -> io::Result<Self> {
        Ok(Self {
            listener: TcpListener::bind(addr)?,
            platform: Arc::new(Mutex::new(platform)),
        })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    pub fn platform(&self) -> Shared {
        Arc::clone(&self.platform)
    }

    /// Accepts connections until the listener fails.
    pub fn run(self) -> io::Result<()> {
        for stream in self.listener.incoming() {
            let stream = stream?;
            let platform = Arc::clone(&self.platform);
            thread::spawn(move || {
                let _ = serve_connection(stream, platform);
            });
        }
        Ok(())
    }

    /// Runs the accept loop on a background thread.
    pub fn spawn(self) -> io::Result<(SocketAddr, Shared, JoinHandle<io::Result<()>>)> {
        let addr = self.local_addr()?;
        let platform = self.platform();
        Ok((addr, platform, thread::spawn(move || self.run())))
    }
}

fn serve_connection(stream: TcpStream, platform: Shared) -> io::Result<()> {
    stream.set_nodelay(true)?;
    let mut out = stream.try_clone()?;
    let reader = BufReader::new(stream);
    for line in reader.split(b'\n') {
        let bytes = line?;
        let response = match std::str::from_utf8(&bytes) {
            Ok(text) if text.trim().is_empty() => continue,
            Ok(text) => {
                let mut p = platform.lock().unwrap_or_else(|e| e.into_inner());
                handle_line(&mut p, text.trim_end_matches('\r'))
            }
            Err(_) => failure(crate::protocol::MALFORMED, "request is not UTF-8"),
        };
        out.write_all(format!("{response}\n").as_bytes())?;
    }
    Ok(())
}
