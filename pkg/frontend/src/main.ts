/**
 * Console entry point. Served from /ui/ by the proxy's management listener,
 * so the API client can stay on the page's own origin.
 */

import { AdminApi } from './api.js';
import { mountConsole } from './view.js';

const root = document.getElementById('app');
if (root) {
  mountConsole(root, new AdminApi(''));
} else {
  console.error('Console container #app not found');
}
