//! Blocking line client for the gateway.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{TcpStream, ToSocketAddrs};

use coopnet_core::platform::AccountRole;
use coopnet_core::registry::{ServiceDescription, ServiceQuery};
use coopnet_core::selection::{Contract, ContractStatus};
use serde_json::Value;

use crate::protocol::{Request, WireMode, WireQuery, WireRole, WireService};
use crate::scenario::{Backend, BackendError, Chosen};

pub struct Client {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
}

impl Client {
    pub fn connect(addr: impl ToSocketAddrs) -> io::Result<Self> {
        let writer = TcpStream::connect(addr)?;
        writer.set_nodelay(true)?;
        Ok(Self {
            reader: BufReader::new(writer.try_clone()?),
            writer,
        })
    }

    /// Sends one raw line and reads one response line.
    pub fn raw(&mut self, line: &str) -> io::Result<Value> {
        self.writer.write_all(format!("{line}\n").as_bytes())?;
        self.writer.flush()?;
        let mut buf = String::new();
        if self.reader.read_line(&mut buf)? == 0 {
            return Err(io::Error::new(
                io::ErrorKind::UnexpectedEof,
                "gateway closed the connection",
            ));
        }
        serde_json::from_str(&buf).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }

    pub fn send(&mut self, req: &Request) -> io::Result<Value> {
        self.raw(&serde_json::to_string(req).expect("requests serialize"))
    }

    /// Like `send`, with a failure response turned into an error.
    fn call(&mut self, req: Request) -> Result<Value, BackendError> {
        let v = self.send(&req).map_err(|e| BackendError {
            code: "io".into(),
            message: e.to_string(),
        })?;
        if v["ok"] == Value::Bool(true) {
            Ok(v)
        } else {
            Err(BackendError {
                code: v["error"].as_str().unwrap_or("unknown").to_string(),
                message: v["message"].as_str().unwrap_or_default().to_string(),
            })
        }
    }
}

fn wire_role(role: AccountRole) -> WireRole {
    match role {
        AccountRole::Provider => WireRole::Provider,
        _ => WireRole::Customer,
    }
}

fn field(v: &Value, key: &str) -> Result<String, BackendError> {
    v[key].as_str().map(str::to_string).ok_or_else(|| BackendError {
        code: "bad-response".into(),
        message: format!("missing `{key}`"),
    })
}

/// Reads a contract back from its wire view.
pub fn contract_from_view(v: &Value) -> Result<(Contract, ContractStatus), BackendError> {
    let bad = |m: String| BackendError {
        code: "bad-response".into(),
        message: m,
    };
    let mut obj = v.clone();
    let status: ContractStatus =
        serde_json::from_value(obj["status"].take()).map_err(|e| bad(format!("status: {e}")))?;
    let map = obj
        .as_object_mut()
        .ok_or_else(|| bad("contract is not an object".into()))?;
    map.remove("status");
    let snake: serde_json::Map<String, Value> = map.iter().map(|(k, v)| (k.replace('-', "_"), v.clone())).collect();
    let contract = serde_json::from_value(Value::Object(snake)).map_err(|e| bad(e.to_string()))?;
    Ok((contract, status))
}

impl Backend for Client {
    fn register(&mut self, login: &str, password: &str, role: AccountRole) -> Result<String, BackendError> {
        let v = self.call(Request::Register {
            login: login.into(),
            password: password.into(),
            role: wire_role(role),
            profile: None,
        })?;
        field(&v, "account")
    }

    fn authenticate(&mut self, login: &str, password: &str, role: AccountRole) -> Result<String, BackendError> {
        let v = self.call(Request::Authenticate {
            login: login.into(),
            password: password.into(),
            role: wire_role(role),
        })?;
        field(&v, "session")
    }

    fn publish(&mut self, session: &str, draft: ServiceDescription) -> Result<String, BackendError> {
        let v = self.call(Request::Publish {
            session: session.into(),
            service: WireService::from_description(&draft),
        })?;
        field(&v, "service")
    }

    fn submit(&mut self, session: &str, query: ServiceQuery) -> Result<String, BackendError> {
        let v = self.call(Request::SubmitRequest {
            session: session.into(),
            query: WireQuery::from_query(&query),
        })?;
        field(&v, "request")
    }

    fn ranked(&mut self, session: &str, request: &str) -> Result<Vec<String>, BackendError> {
        let v = self.call(Request::ListResults {
            session: session.into(),
            request: request.into(),
        })?;
        let rows = v["results"].as_array().cloned().unwrap_or_default();
        rows.iter().map(|r| field(r, "service")).collect()
    }

    fn choose(&mut self, session: &str, request: &str, service: &str) -> Result<Chosen, BackendError> {
        let v = self.call(Request::ChooseService {
            session: session.into(),
            request: request.into(),
            service: service.into(),
            mode: WireMode::Auto,
        })?;
        let status = field(&v, "status")?;
        Ok(Chosen {
            negotiation: field(&v, "negotiation")?,
            agreed: v["contract"].as_str().map(str::to_string),
            failed: status == "no-agreement" || status == "failed",
        })
    }

    fn contract(&mut self, session: &str, contract: &str) -> Result<(Contract, ContractStatus), BackendError> {
        let v = self.call(Request::ContractStatus {
            session: session.into(),
            contract: contract.into(),
        })?;
        contract_from_view(&v["contract"])
    }
}
