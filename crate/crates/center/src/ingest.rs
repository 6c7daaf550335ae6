//! Agent connections: one task per session reads, stores and applies frames
//! in arrival order; a second task writes commands back.

use std::io;
use std::sync::Arc;

use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::tcp::OwnedReadHalf;
use tokio::net::{TcpListener, TcpStream};

use patrol_core::protocol::{decode_payload, encode, Message, MAX_FRAME};

use crate::hub::{now_ms, Center, SessionStatus};

enum FrameError {
    Io,
    Oversize(usize),
}

/// Next raw frame, length prefix included. `None` on end of stream at a
/// frame boundary.
async fn read_raw(r: &mut OwnedReadHalf) -> Result<Option<Vec<u8>>, FrameError> {
    let mut len = [0u8; 4];
    match r.read_exact(&mut len).await {
        Ok(_) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(_) => return Err(FrameError::Io),
    }
    let n = u32::from_be_bytes(len) as usize;
    if 4 + n > MAX_FRAME {
        return Err(FrameError::Oversize(4 + n));
    }
    let mut frame = vec![0u8; 4 + n];
    frame[..4].copy_from_slice(&len);
    r.read_exact(&mut frame[4..]).await.map_err(|_| FrameError::Io)?;
    Ok(Some(frame))
}

pub async fn serve_agents(center: Arc<Center>, listener: TcpListener) -> io::Result<()> {
    loop {
        let (sock, peer) = listener.accept().await?;
        tracing::info!("agent connected from {peer}");
        tokio::spawn(handle_agent(Arc::clone(&center), sock));
    }
}

async fn handle_agent(center: Arc<Center>, sock: TcpStream) {
    let _ = sock.set_nodelay(true);
    let (mut rd, mut wr) = sock.into_split();
    let first = match read_raw(&mut rd).await {
        Ok(Some(f)) => f,
        _ => return,
    };
    let hello = match decode_payload(&first[4..]) {
        Ok(Message::Hello(h)) => h,
        _ => {
            tracing::warn!("agent did not open with a hello; dropping connection");
            return;
        }
    };
    let (id, mut writer, mut rx) = match center.open_session(&hello) {
        Ok(s) => s,
        Err(e) => {
            center.report_storage_error(&e);
            return;
        }
    };
    if let Err(e) = writer.append(now_ms(), &first) {
        center.report_storage_error(&e);
    }

    let send = tokio::spawn(async move {
        while let Some(msg) = rx.recv().await {
            let bye = matches!(msg, Message::Bye(_));
            let Ok(frame) = encode(&msg) else { continue };
            if wr.write_all(&frame).await.is_err() {
                break;
            }
            if bye {
                break;
            }
        }
        let _ = wr.shutdown().await;
    });

    let status = loop {
        let frame = match read_raw(&mut rd).await {
            Ok(Some(f)) => f,
            Ok(None) => break SessionStatus::Disconnected,
            Err(FrameError::Io) => break SessionStatus::Disconnected,
            Err(FrameError::Oversize(n)) => {
                tracing::warn!("session {id}: oversize frame of {n} bytes; closing");
                break SessionStatus::Failed;
            }
        };
        let msg = match decode_payload(&frame[4..]) {
            Ok(m) => m,
            Err(e) => {
                center.decode_error(&id, &e);
                continue;
            }
        };
        if let Err(e) = writer.append(now_ms(), &frame) {
            center.report_storage_error(&e);
        }
        if matches!(msg, Message::Bye(_)) {
            if let Err(e) = writer.sync() {
                center.report_storage_error(&e);
            }
            break SessionStatus::Closed;
        }
        center.observe(&id, &msg);
    };
    center.close_session(&id, status);
    let _ = send.await;
    tracing::info!("session {id} ended: {status:?}");
}
