//! Ordered reliable byte channels between the two party actors.

use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::sync::mpsc::{channel, Receiver, RecvTimeoutError, Sender};
use std::time::Duration;

use super::frame::{Frame, HEADER_LEN};
use crate::error::{Error, Result};

pub trait Transport: Send {
    fn send_bytes(&mut self, bytes: Vec<u8>) -> Result<()>;
    /// Blocks until one complete frame arrives.
    fn recv_bytes(&mut self) -> Result<Vec<u8>>;
}

pub struct LoopbackTransport {
    tx: Sender<Vec<u8>>,
    rx: Receiver<Vec<u8>>,
    timeout: Duration,
}

/// Two connected in-process endpoints.
pub fn loopback_pair(timeout: Duration) -> (LoopbackTransport, LoopbackTransport) {
    let (tx1, rx1) = channel();
    let (tx2, rx2) = channel();
    (
        LoopbackTransport {
            tx: tx1,
            rx: rx2,
            timeout,
        },
        LoopbackTransport {
            tx: tx2,
            rx: rx1,
            timeout,
        },
    )
}

impl Transport for LoopbackTransport {
    fn send_bytes(&mut self, bytes: Vec<u8>) -> Result<()> {
        self.tx
            .send(bytes)
            .map_err(|_| Error::Transport("loopback peer hung up".into()))
    }

    fn recv_bytes(&mut self) -> Result<Vec<u8>> {
        self.rx.recv_timeout(self.timeout).map_err(|e| match e {
            RecvTimeoutError::Timeout => Error::Transport(format!("no frame within {:?}", self.timeout)),
            RecvTimeoutError::Disconnected => Error::Transport("loopback peer hung up".into()),
        })
    }
}

pub struct TcpTransport {
    stream: TcpStream,
}

impl TcpTransport {
    pub fn connect(addr: impl ToSocketAddrs, timeout: Duration) -> Result<Self> {
        let stream = TcpStream::connect(addr).map_err(|e| Error::Transport(format!("connect: {e}")))?;
        Self::from_stream(stream, timeout)
    }

    pub fn accept(listener: &TcpListener, timeout: Duration) -> Result<Self> {
        let (stream, _) = listener
            .accept()
            .map_err(|e| Error::Transport(format!("accept: {e}")))?;
        Self::from_stream(stream, timeout)
    }

    fn from_stream(stream: TcpStream, timeout: Duration) -> Result<Self> {
        stream
            .set_read_timeout(Some(timeout))
            .and_then(|_| stream.set_nodelay(true))
            .map_err(|e| Error::Transport(format!("socket setup: {e}")))?;
        Ok(Self { stream })
    }
}

impl Transport for TcpTransport {
    fn send_bytes(&mut self, bytes: Vec<u8>) -> Result<()> {
        self.stream
            .write_all(&bytes)
            .map_err(|e| Error::Transport(format!("send: {e}")))
    }

    fn recv_bytes(&mut self) -> Result<Vec<u8>> {
        let mut header = [0u8; HEADER_LEN];
        self.stream
            .read_exact(&mut header)
            .map_err(|e| Error::Transport(format!("recv header: {e}")))?;
        let len = Frame::payload_len(&header)?;
        let mut out = Vec::with_capacity(HEADER_LEN + len);
        out.extend_from_slice(&header);
        out.resize(HEADER_LEN + len, 0);
        self.stream
            .read_exact(&mut out[HEADER_LEN..])
            .map_err(|e| Error::Transport(format!("recv payload: {e}")))?;
        Ok(out)
    }
}
