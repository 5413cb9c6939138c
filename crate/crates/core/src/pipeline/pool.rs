//! FIFO job queue shared by the worker threads.

use std::collections::VecDeque;
use std::sync::{Condvar, Mutex};

pub struct JobQueue<T> {
    state: Mutex<QueueState<T>>,
    ready: Condvar,
}

struct QueueState<T> {
    jobs: VecDeque<T>,
    closed: bool,
}

impl<T> Default for JobQueue<T> {
    fn default() -> Self {
        Self { state: Mutex::new(QueueState { jobs: VecDeque::new(), closed: false }), ready: Condvar::new() }
    }
}

impl<T> JobQueue<T> {
    pub fn push(&self, job: T) {
        self.state.lock().unwrap().jobs.push_back(job);
        self.ready.notify_one();
    }

    pub fn push_all(&self, jobs: impl IntoIterator<Item = T>) {
        let mut st = self.state.lock().unwrap();
        let before = st.jobs.len();
        st.jobs.extend(jobs);
        let added = st.jobs.len() - before;
        drop(st);
        for _ in 0..added {
            self.ready.notify_one();
        }
    }

    /// Blocks until a job is available; `None` once closed and drained.
    pub fn pop(&self) -> Option<T> {
        let mut st = self.state.lock().unwrap();
        loop {
            if let Some(j) = st.jobs.pop_front() {
                return Some(j);
            }
            if st.closed {
                return None;
            }
            st = self.ready.wait(st).unwrap();
        }
    }

    pub fn close(&self) {
        self.state.lock().unwrap().closed = true;
        self.ready.notify_all();
    }

    pub fn len(&self) -> usize {
        self.state.lock().unwrap().jobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
