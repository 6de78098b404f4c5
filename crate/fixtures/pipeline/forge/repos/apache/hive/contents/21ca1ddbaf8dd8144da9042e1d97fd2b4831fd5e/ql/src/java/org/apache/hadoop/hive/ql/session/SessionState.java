package org.apache.hadoop.hive.ql.session;

import org.slf4j.Logger;
import org.slf4j.LoggerFactory;

public class SessionState {

  private static final Logger LOG = LoggerFactory.getLogger(SessionState.class);

  private String sessionId;

  public void close() {
    if (sessionId != null) {
      releaseResources();
      LOG.info("Closed session {}", sessionId);
    }
  }

  private void releaseResources() {
  }
}
