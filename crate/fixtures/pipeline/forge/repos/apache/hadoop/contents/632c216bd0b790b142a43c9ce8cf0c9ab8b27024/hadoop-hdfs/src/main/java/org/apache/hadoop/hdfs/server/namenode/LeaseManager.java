package org.apache.hadoop.hdfs.server.namenode;

import org.slf4j.Logger;
import org.slf4j.LoggerFactory;

public class LeaseManager {

  private static final Logger LOG = LoggerFactory.getLogger(LeaseManager.class);

  synchronized boolean checkLeases(Lease lease) {
    boolean completed = internalReleaseLease(lease);
    if (!completed) {
      LOG.info("Lease recovery for {} is in progress", lease.getHolder());
    }
    return completed;
  }

  private boolean internalReleaseLease(Lease lease) {
    return lease.expire();
  }
}
